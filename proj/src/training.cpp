#include "polygnn/training.hpp"

#include "polygnn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace polygnn {

std::string to_string(Variant v) {
    switch (v) {
        case Variant::M_L2_mlp:
            return "M_L2_mlp";
        case Variant::M_H1_mlp:
            return "M_H1_mlp";
        case Variant::M_H1_hybrid:
            return "M_H1_hybrid";
        case Variant::M_H1_reg:
            return "M_H1_reg";
    }
    return "unknown";
}

Variant parse_variant(const std::string& s) {
    for (auto v : {Variant::M_L2_mlp, Variant::M_H1_mlp, Variant::M_H1_hybrid, Variant::M_H1_reg}) {
        if (to_string(v) == s) return v;
    }
    throw std::invalid_argument("unknown model variant: " + s);
}

LossKind loss_kind(Variant v) { return v == Variant::M_L2_mlp ? LossKind::L2 : LossKind::H1; }

bool uses_graph(Variant v) { return v == Variant::M_H1_hybrid || v == Variant::M_H1_reg; }

void validate(const TrainConfig& cfg) {
    if (cfg.epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
    if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
    if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("train: learning_rate must be positive");
    if (cfg.patience < 1) throw std::invalid_argument("train: patience must be >= 1");
    if (!(cfg.decay > 0.0 && cfg.decay <= 1.0)) throw std::invalid_argument("train: decay must lie in (0,1]");
    if (!(cfg.validation_fraction >= 0.0 && cfg.validation_fraction < 1.0))
        throw std::invalid_argument("train: validation_fraction must lie in [0,1)");
    if (!(cfg.dropout_rate >= 0.0 && cfg.dropout_rate < 1.0))
        throw std::invalid_argument("train: dropout_rate must lie in [0,1)");
    if (!(cfg.l2_coefficient >= 0.0)) throw std::invalid_argument("train: l2_coefficient must be >= 0");
}

ModelParams initial_model(const TrainConfig& cfg) {
    Architecture arch = cfg.arch;
    arch.use_graph = uses_graph(cfg.variant);
    ModelParams p = init_params(arch, cfg.seed);
    if (cfg.variant == Variant::M_H1_reg) {
        p.dropout_rate = cfg.dropout_rate;
        p.l2_coefficient = cfg.l2_coefficient;
    }
    return p;
}

TrainingData make_training_data(std::span<const DeformationSample> samples, const std::map<int, Polycrystal>& rves,
                                PropagationMode mode) {
    TrainingData d;
    std::map<int, std::size_t> graph_index;
    for (const auto& s : samples) {
        if (graph_index.count(s.rve_id)) continue;
        const auto it = rves.find(s.rve_id);
        if (it == rves.end()) throw std::invalid_argument("training data: no RVE for id " + std::to_string(s.rve_id));
        graph_index[s.rve_id] = d.graphs.size();
        d.graphs.push_back(make_graph_input(it->second, mode));
        d.graph_rve_ids.push_back(s.rve_id);
    }
    d.points.reserve(samples.size());
    for (const auto& s : samples) {
        d.points.push_back({graph_index.at(s.rve_id), s.C, s.psi, s.S});
        d.point_rve_ids.push_back(s.rve_id);
    }
    return d;
}

Normalization fit_normalization(std::span<const LabeledPoint> points) {
    Normalization n;
    n.c_scale.setZero();
    double psi_max = 0.0;
    for (const auto& p : points) {
        n.c_scale = n.c_scale.cwiseMax((p.C - n.c_shift).cwiseAbs());
        psi_max = std::max(psi_max, std::abs(p.psi));
    }
    for (int k = 0; k < 6; ++k)
        if (!(n.c_scale[k] > 0.0)) n.c_scale[k] = 1.0;
    n.psi_scale = psi_max > 0.0 ? psi_max : 1.0;
    return n;
}

namespace {

struct Adam {
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    std::vector<double> m, v;
    long step = 0;

    explicit Adam(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

    void update(std::vector<double>& theta, const std::vector<double>& g, double lr) {
        ++step;
        const double c1 = 1.0 - std::pow(beta1, double(step));
        const double c2 = 1.0 - std::pow(beta2, double(step));
        for (std::size_t i = 0; i < theta.size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
            theta[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
        }
    }
};

std::vector<LabeledPoint> gather(const std::vector<LabeledPoint>& pts, std::span<const std::size_t> idx) {
    std::vector<LabeledPoint> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(pts[i]);
    return out;
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const TrainingData& data) {
    validate(cfg);
    if (data.points.empty()) throw std::invalid_argument("train: empty dataset");
    if (data.point_rve_ids.size() != data.points.size()) throw std::invalid_argument("train: one rve id per point required");
    if (uses_graph(cfg.variant) && data.graphs.empty()) throw std::invalid_argument("train: hybrid variant needs graphs");

    TrainResult result;
    result.params = initial_model(cfg);

    std::mt19937_64 rng(mix_seed(cfg.seed, 0x7a1));
    std::vector<std::size_t> val_idx, train_idx;
    if (cfg.validation_unit == FoldUnit::rve) {
        std::vector<int> ids(data.point_rve_ids.begin(), data.point_rve_ids.end());
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        std::shuffle(ids.begin(), ids.end(), rng);
        auto n_val = static_cast<std::size_t>(std::round(cfg.validation_fraction * double(ids.size())));
        if (cfg.validation_fraction > 0.0) n_val = std::max<std::size_t>(n_val, 1);
        if (n_val >= ids.size()) n_val = 0;
        std::sort(ids.begin(), ids.begin() + std::ptrdiff_t(n_val));
        for (std::size_t i = 0; i < data.points.size(); ++i) {
            const bool held = std::binary_search(ids.begin(), ids.begin() + std::ptrdiff_t(n_val), data.point_rve_ids[i]);
            (held ? val_idx : train_idx).push_back(i);
        }
    } else {
        std::vector<std::size_t> order(data.points.size());
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        auto n_val = static_cast<std::size_t>(std::floor(cfg.validation_fraction * double(order.size())));
        if (n_val >= order.size()) n_val = 0;
        val_idx.assign(order.begin(), order.begin() + std::ptrdiff_t(n_val));
        train_idx.assign(order.begin() + std::ptrdiff_t(n_val), order.end());
        std::sort(train_idx.begin(), train_idx.end());
        std::sort(val_idx.begin(), val_idx.end());
    }
    // without a held-out set the plateau logic watches the training loss
    const auto& monitor_idx = val_idx.empty() ? train_idx : val_idx;
    const auto monitor = gather(data.points, monitor_idx);

    {
        const auto train_pts = gather(data.points, train_idx);
        if (cfg.normalize) result.params.norm = fit_normalization(train_pts);
    }
    if (cfg.epochs == 0) return result;

    ModelParams params = result.params;
    std::vector<double> theta = flatten_parameters(params);
    Adam adam(theta.size());
    std::mt19937_64 dropout_rng(mix_seed(cfg.seed, 0xd40));
    LossOptions train_opts{loss_kind(cfg.variant), 1.0, &dropout_rng};
    LossOptions eval_opts{loss_kind(cfg.variant), 1.0, nullptr};

    double lr = cfg.learning_rate;
    double best = std::numeric_limits<double>::infinity();
    int since_best = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(train_idx.begin(), train_idx.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < train_idx.size(); start += std::size_t(cfg.batch_size)) {
            const std::size_t stop = std::min(train_idx.size(), start + std::size_t(cfg.batch_size));
            const auto batch = gather(data.points, std::span(train_idx).subspan(start, stop - start));
            const auto r = loss_and_param_grads(params, data.graphs, batch, train_opts);
            epoch_loss += r.loss * double(batch.size());
            adam.update(theta, r.grad, lr);
            assign_parameters(params, theta);
        }
        epoch_loss /= double(train_idx.size());

        const double val = loss_and_param_grads(params, data.graphs, monitor, eval_opts).data_loss;
        if (!std::isfinite(val) || !std::isfinite(epoch_loss)) {
            throw NumericError("train: loss diverged at epoch " + std::to_string(epoch));
        }
        result.history.push_back({epoch, epoch_loss, val, lr});
        if (val < best) {
            best = val;
            since_best = 0;
            result.params = params;
            result.best_epoch = epoch;
        } else if (++since_best >= cfg.patience) {
            lr = std::max(lr * cfg.decay, cfg.min_learning_rate);
            since_best = 0;
        }
    }
    return result;
}

std::vector<int> kfold(std::size_t n_units, int k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("kfold: k must be >= 2");
    if (std::size_t(k) > n_units) throw std::invalid_argument("kfold: more folds than units");
    std::vector<std::size_t> perm(n_units);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(mix_seed(seed, 0xf01d));
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> fold(n_units);
    for (std::size_t pos = 0; pos < n_units; ++pos) fold[perm[pos]] = int(pos % std::size_t(k));
    return fold;
}

std::vector<int> kfold_samples(std::span<const DeformationSample> samples, int k, FoldUnit unit, std::uint64_t seed) {
    if (unit == FoldUnit::sample) return kfold(samples.size(), k, seed);
    std::vector<int> ids;
    for (const auto& s : samples) ids.push_back(s.rve_id);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    const auto unit_fold = kfold(ids.size(), k, seed);
    std::vector<int> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        const auto pos = std::lower_bound(ids.begin(), ids.end(), s.rve_id) - ids.begin();
        out.push_back(unit_fold[std::size_t(pos)]);
    }
    return out;
}

std::vector<GroupMetrics> evaluate_groups(const ModelParams& params, const TrainingData& data) {
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < data.points.size(); ++i) groups[data.point_rve_ids[i]].push_back(i);

    std::vector<GroupMetrics> out;
    for (const auto& [rve, idx] : groups) {
        const auto graph_id = data.points[idx.front()].graph;
        const SurrogateModel model(params, params.arch.use_graph ? &data.graphs[graph_id] : nullptr);
        std::vector<double> psi_pred, psi_true;
        std::vector<Voigt> s_pred, s_true;
        for (auto i : idx) {
            const auto& pt = data.points[i];
            psi_pred.push_back(model.energy(pt.C));
            psi_true.push_back(pt.psi);
            s_pred.push_back(model.stress(pt.C));
            s_true.push_back(pt.S);
        }
        GroupMetrics g;
        g.rve_id = rve;
        g.n_samples = idx.size();
        g.psi = scaled_mse(psi_pred, psi_true);
        const auto se = stress_series_error(s_pred, s_true);
        g.principal_values = se.principal_values;
        g.principal_directions = se.principal_directions;
        out.push_back(g);
    }
    return out;
}

}  // namespace polygnn
