#include "polygnn/network.hpp"

#include "polygnn/errors.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>

namespace polygnn {

namespace {

// Forward-mode scalar carrying one directional derivative.
struct Dual {
    double v = 0.0;
    double d = 0.0;

    Dual() = default;
    Dual(double value, double deriv = 0.0) : v(value), d(deriv) {}

    Dual& operator+=(const Dual& o) {
        v += o.v;
        d += o.d;
        return *this;
    }
};

inline Dual operator+(Dual a, const Dual& b) { return a += b; }
inline Dual operator*(const Dual& a, const Dual& b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
inline Dual operator*(double a, const Dual& b) { return {a * b.v, a * b.d}; }

inline double elu(double z) { return z >= 0.0 ? z : std::expm1(z); }
inline double elu_prime(double z) { return z >= 0.0 ? 1.0 : std::exp(z); }
inline Dual elu(const Dual& z) { return z.v >= 0.0 ? z : Dual{std::expm1(z.v), std::exp(z.v) * z.d}; }
inline Dual elu_prime(const Dual& z) {
    if (z.v >= 0.0) return Dual{1.0, 0.0};
    const double e = std::exp(z.v);
    return Dual{e, e * z.d};
}

std::vector<const DenseLayer*> layer_sequence(const ModelParams& p) {
    std::vector<const DenseLayer*> seq;
    for (const auto& l : p.gcn) seq.push_back(&l);
    for (const auto& l : p.encoder) seq.push_back(&l);
    for (const auto& l : p.mlp) seq.push_back(&l);
    seq.push_back(&p.output);
    return seq;
}

std::vector<DenseLayer*> layer_sequence(ModelParams& p) {
    std::vector<DenseLayer*> seq;
    for (auto& l : p.gcn) seq.push_back(&l);
    for (auto& l : p.encoder) seq.push_back(&l);
    for (auto& l : p.mlp) seq.push_back(&l);
    seq.push_back(&p.output);
    return seq;
}

std::size_t layer_size(const DenseLayer& l) { return std::size_t(l.W.size() + l.b.size()); }

using RowMajorMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

DenseLayer glorot_layer(int fan_in, int fan_out, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / double(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    DenseLayer l;
    l.W.resize(fan_in, fan_out);
    // row-major fill keeps the draw order independent of Eigen's storage order
    for (int i = 0; i < fan_in; ++i)
        for (int j = 0; j < fan_out; ++j) l.W(i, j) = u(rng);
    l.b = Eigen::VectorXd::Zero(fan_out);
    return l;
}

struct LayerShape {
    int in, out;
};

std::vector<LayerShape> mlp_shapes(const Architecture& a) {
    std::vector<LayerShape> s;
    int in = a.mlp_input_dim();
    for (int h : a.mlp_hidden) {
        s.push_back({in, h});
        in = h;
    }
    s.push_back({in, 1});
    return s;
}

std::vector<LayerShape> gcn_shapes(const Architecture& a) {
    std::vector<LayerShape> s;
    int in = a.n_features;
    for (int c : a.gcn_channels) {
        s.push_back({in, c});
        in = c;
    }
    return s;
}

std::vector<LayerShape> encoder_shapes(const Architecture& a) {
    std::vector<LayerShape> s;
    int in = a.max_nodes * a.gcn_channels.back();
    for (int h : a.encoder_hidden) {
        s.push_back({in, h});
        in = h;
    }
    s.push_back({in, a.encoded_dim});
    return s;
}

ModelParams build_params(const Architecture& arch, std::mt19937_64* rng) {
    validate(arch);
    auto make = [&](LayerShape s) {
        if (rng) return glorot_layer(s.in, s.out, *rng);
        return DenseLayer{Eigen::MatrixXd::Zero(s.in, s.out), Eigen::VectorXd::Zero(s.out)};
    };
    ModelParams p;
    p.arch = arch;
    if (arch.use_graph) {
        for (auto s : gcn_shapes(arch)) p.gcn.push_back(make(s));
        for (auto s : encoder_shapes(arch)) p.encoder.push_back(make(s));
    }
    const auto ms = mlp_shapes(arch);
    for (std::size_t i = 0; i + 1 < ms.size(); ++i) p.mlp.push_back(make(ms[i]));
    p.output = make(ms.back());
    return p;
}

// Value of the MLP head and its reverse-mode gradients with respect to the
// MLP parameters (flat slice, same layout as flatten_parameters) and to the
// input x. Instantiated for double and for Dual, where the dual part of x
// carries a direction and the dual parts of the outputs are the directional
// derivatives of the gradients.
template <class T>
T mlp_backprop(const ModelParams& p, const std::vector<T>& x, std::vector<T>& grad_params, std::vector<T>& grad_x) {
    const std::size_t n_hidden = p.mlp.size();
    std::vector<std::vector<T>> h(n_hidden + 1), z(n_hidden);
    h[0] = x;
    for (std::size_t l = 0; l < n_hidden; ++l) {
        const auto& L = p.mlp[l];
        const auto in = std::size_t(L.fan_in()), out = std::size_t(L.fan_out());
        z[l].assign(out, T{});
        h[l + 1].resize(out);
        for (std::size_t j = 0; j < out; ++j) {
            T acc = L.b[Eigen::Index(j)];
            for (std::size_t i = 0; i < in; ++i) acc += L.W(Eigen::Index(i), Eigen::Index(j)) * h[l][i];
            z[l][j] = acc;
            h[l + 1][j] = elu(acc);
        }
    }
    const auto& O = p.output;
    T y = O.b[0];
    for (Eigen::Index i = 0; i < O.fan_in(); ++i) y += O.W(i, 0) * h[n_hidden][std::size_t(i)];

    grad_params.assign(grad_params.size(), T{});
    std::size_t offset = 0;
    std::vector<std::size_t> offsets(n_hidden);
    for (std::size_t l = 0; l < n_hidden; ++l) {
        offsets[l] = offset;
        offset += layer_size(p.mlp[l]);
    }
    const std::size_t out_offset = offset;

    std::vector<T> h_bar(std::size_t(O.fan_in()));
    for (Eigen::Index i = 0; i < O.fan_in(); ++i) {
        grad_params[out_offset + std::size_t(i)] = h[n_hidden][std::size_t(i)];
        h_bar[std::size_t(i)] = T(O.W(i, 0));
    }
    grad_params[out_offset + std::size_t(O.fan_in())] = T(1.0);

    for (std::size_t l = n_hidden; l-- > 0;) {
        const auto& L = p.mlp[l];
        const auto in = std::size_t(L.fan_in()), out = std::size_t(L.fan_out());
        std::vector<T> z_bar(out);
        for (std::size_t j = 0; j < out; ++j) z_bar[j] = h_bar[j] * elu_prime(z[l][j]);
        T* gW = &grad_params[offsets[l]];
        T* gb = gW + in * out;
        std::vector<T> prev_bar(in);
        for (std::size_t i = 0; i < in; ++i) {
            T acc{};
            for (std::size_t j = 0; j < out; ++j) {
                gW[i * out + j] = h[l][i] * z_bar[j];
                acc += L.W(Eigen::Index(i), Eigen::Index(j)) * z_bar[j];
            }
            prev_bar[i] = acc;
        }
        for (std::size_t j = 0; j < out; ++j) gb[j] = z_bar[j];
        h_bar = std::move(prev_bar);
    }
    grad_x = std::move(h_bar);
    return y;
}

std::size_t mlp_parameter_count(const ModelParams& p) {
    std::size_t n = layer_size(p.output);
    for (const auto& l : p.mlp) n += layer_size(l);
    return n;
}

std::vector<double> network_input(const ModelParams& p, const Eigen::VectorXd& encoded, const Voigt& C) {
    const auto ne = std::size_t(p.arch.use_graph ? p.arch.encoded_dim : 0);
    if (std::size_t(encoded.size()) != ne) throw std::invalid_argument("network: encoding has wrong dimension");
    std::vector<double> x(ne + 6);
    for (std::size_t i = 0; i < ne; ++i) x[i] = encoded[Eigen::Index(i)];
    for (int k = 0; k < 6; ++k) x[ne + std::size_t(k)] = (C[k] - p.norm.c_shift[k]) / p.norm.c_scale[k];
    return x;
}

}  // namespace

void validate(const Architecture& a) {
    auto positive = [](const std::vector<int>& v) {
        for (int x : v)
            if (x < 1) return false;
        return true;
    };
    if (!positive(a.mlp_hidden)) throw std::invalid_argument("architecture: mlp widths must be >= 1");
    if (a.use_graph) {
        if (a.n_features < 1 || a.max_nodes < 1 || a.encoded_dim < 1)
            throw std::invalid_argument("architecture: graph branch dimensions must be >= 1");
        if (a.gcn_channels.empty() || !positive(a.gcn_channels) || !positive(a.encoder_hidden))
            throw std::invalid_argument("architecture: graph branch widths must be >= 1");
    }
}

ModelParams init_params(const Architecture& arch, std::uint64_t seed) {
    std::mt19937_64 rng(mix_seed(seed, 0x1417));
    return build_params(arch, &rng);
}

ModelParams zero_params(const Architecture& arch) { return build_params(arch, nullptr); }

std::size_t parameter_count(const ModelParams& p) {
    std::size_t n = 0;
    for (const auto* l : layer_sequence(p)) n += layer_size(*l);
    return n;
}

std::size_t graph_branch_parameter_count(const ModelParams& p) {
    std::size_t n = 0;
    for (const auto& l : p.gcn) n += layer_size(l);
    for (const auto& l : p.encoder) n += layer_size(l);
    return n;
}

std::vector<double> flatten_parameters(const ModelParams& p) {
    std::vector<double> flat;
    flat.reserve(parameter_count(p));
    for (const auto* l : layer_sequence(p)) {
        for (Eigen::Index i = 0; i < l->W.rows(); ++i)
            for (Eigen::Index j = 0; j < l->W.cols(); ++j) flat.push_back(l->W(i, j));
        for (Eigen::Index j = 0; j < l->b.size(); ++j) flat.push_back(l->b[j]);
    }
    return flat;
}

void assign_parameters(ModelParams& p, std::span<const double> flat) {
    if (flat.size() != parameter_count(p)) throw std::invalid_argument("assign_parameters: size mismatch");
    std::size_t k = 0;
    for (auto* l : layer_sequence(p)) {
        for (Eigen::Index i = 0; i < l->W.rows(); ++i)
            for (Eigen::Index j = 0; j < l->W.cols(); ++j) l->W(i, j) = flat[k++];
        for (Eigen::Index j = 0; j < l->b.size(); ++j) l->b[j] = flat[k++];
    }
}

GraphInput make_graph_input(const Polycrystal& p, PropagationMode mode) {
    const auto pairs = contacts(p);
    const Graph g = build_graph(p.n_grains(), pairs);
    return {propagation_operator(g, mode), feature_matrix(p)};
}

GcnOutput gcn_branch(const ModelParams& p, const GraphInput& g, std::mt19937_64* rng) {
    const auto& a = p.arch;
    if (!a.use_graph) throw std::invalid_argument("gcn_branch: architecture has no graph branch");
    const Eigen::Index n = g.op.rows();
    if (g.op.cols() != n || g.X.rows() != n) throw std::invalid_argument("gcn_branch: operator/feature shape mismatch");
    if (g.X.cols() != a.n_features) throw std::invalid_argument("gcn_branch: wrong feature count");
    if (n > a.max_nodes) {
        throw std::invalid_argument("gcn_branch: graph has " + std::to_string(n) + " nodes, family maximum is " +
                                    std::to_string(a.max_nodes));
    }

    GcnOutput out;
    auto& t = out.trace;
    Eigen::MatrixXd h = g.X;
    for (const auto& layer : p.gcn) {
        Eigen::MatrixXd oh = g.op * h;
        Eigen::MatrixXd z = oh * layer.W;
        z.rowwise() += layer.b.transpose();
        h = z.cwiseMax(0.0);
        t.op_h.push_back(std::move(oh));
        t.z.push_back(std::move(z));
        Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(a.max_nodes, h.cols());
        padded.topRows(n) = h;
        t.h.push_back(std::move(padded));
    }

    // row-major flatten of the padded node matrix
    const Eigen::MatrixXd& last = t.h.back();
    Eigen::VectorXd v(last.size());
    for (Eigen::Index i = 0; i < last.rows(); ++i)
        for (Eigen::Index c = 0; c < last.cols(); ++c) v[i * last.cols() + c] = last(i, c);

    const double rate = p.dropout_rate;
    std::bernoulli_distribution keep(1.0 - rate);
    for (std::size_t j = 0; j < p.encoder.size(); ++j) {
        const auto& layer = p.encoder[j];
        Eigen::VectorXd mask = Eigen::VectorXd::Ones(v.size());
        if (rng && rate > 0.0) {
            for (Eigen::Index i = 0; i < mask.size(); ++i) mask[i] = keep(*rng) ? 1.0 / (1.0 - rate) : 0.0;
        }
        Eigen::VectorXd u = v.cwiseProduct(mask);
        Eigen::VectorXd z = layer.W.transpose() * u + layer.b;
        v = (j + 1 < p.encoder.size()) ? Eigen::VectorXd(z.cwiseMax(0.0)) : z;
        t.dropout_mask.push_back(std::move(mask));
        t.dense_in.push_back(std::move(u));
        t.dense_z.push_back(std::move(z));
    }
    out.encoded = v;
    return out;
}

void gcn_backward(const ModelParams& p, const GraphInput& g, const GcnTrace& t, const Eigen::VectorXd& encoded_adjoint,
                  std::span<double> grad) {
    std::vector<std::size_t> offsets;
    std::size_t offset = 0;
    for (const auto& l : p.gcn) {
        offsets.push_back(offset);
        offset += layer_size(l);
    }
    for (const auto& l : p.encoder) {
        offsets.push_back(offset);
        offset += layer_size(l);
    }
    if (grad.size() < offset) throw std::invalid_argument("gcn_backward: gradient buffer too small");

    Eigen::VectorXd v_bar = encoded_adjoint;
    const std::size_t n_gcn = p.gcn.size();
    for (std::size_t j = p.encoder.size(); j-- > 0;) {
        const auto& layer = p.encoder[j];
        Eigen::VectorXd z_bar = v_bar;
        if (j + 1 < p.encoder.size()) {
            for (Eigen::Index i = 0; i < z_bar.size(); ++i)
                if (!(t.dense_z[j][i] > 0.0)) z_bar[i] = 0.0;
        }
        double* base = grad.data() + offsets[n_gcn + j];
        RowMajorMap gW(base, layer.W.rows(), layer.W.cols());
        gW.noalias() += t.dense_in[j] * z_bar.transpose();
        Eigen::Map<Eigen::VectorXd>(base + layer.W.size(), layer.b.size()) += z_bar;
        v_bar = (layer.W * z_bar).cwiseProduct(t.dropout_mask[j]);
    }

    const Eigen::Index n = g.op.rows();
    const Eigen::Index channels = t.h.back().cols();
    Eigen::MatrixXd h_bar(n, channels);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index c = 0; c < channels; ++c) h_bar(i, c) = v_bar[i * channels + c];

    for (std::size_t l = n_gcn; l-- > 0;) {
        const auto& layer = p.gcn[l];
        Eigen::MatrixXd z_bar = h_bar.cwiseProduct((t.z[l].array() > 0.0).cast<double>().matrix());
        double* base = grad.data() + offsets[l];
        RowMajorMap gW(base, layer.W.rows(), layer.W.cols());
        gW.noalias() += t.op_h[l].transpose() * z_bar;
        Eigen::Map<Eigen::VectorXd>(base + layer.W.size(), layer.b.size()) += z_bar.colwise().sum().transpose();
        if (l > 0) h_bar = g.op.transpose() * (z_bar * layer.W.transpose());
    }
}

Eigen::VectorXd encode(const ModelParams& p, const GraphInput* g) {
    if (!p.arch.use_graph) return Eigen::VectorXd();
    if (!g) throw std::invalid_argument("encode: hybrid model needs a graph input");
    return gcn_branch(p, *g).encoded;
}

double energy_from_encoding(const ModelParams& p, const Eigen::VectorXd& encoded, const Voigt& C) {
    const auto x = network_input(p, encoded, C);
    std::vector<double> gp(mlp_parameter_count(p)), gx;
    return p.norm.psi_scale * mlp_backprop(p, x, gp, gx);
}

Voigt energy_gradient_from_encoding(const ModelParams& p, const Eigen::VectorXd& encoded, const Voigt& C) {
    const auto x = network_input(p, encoded, C);
    std::vector<double> gp(mlp_parameter_count(p)), gx;
    mlp_backprop(p, x, gp, gx);
    const std::size_t ne = x.size() - 6;
    Voigt g;
    for (int k = 0; k < 6; ++k) g[k] = p.norm.psi_scale * gx[ne + std::size_t(k)] / p.norm.c_scale[k];
    return g;
}

Voigt stress_from_energy_gradient(const Voigt& g) {
    Voigt s = g;
    s.head<3>() *= 2.0;
    return s;
}

double model_energy(const ModelParams& p, const GraphInput* g, const Voigt& C) {
    return energy_from_encoding(p, encode(p, g), C);
}

Voigt model_stress(const ModelParams& p, const GraphInput* g, const Voigt& C) {
    return stress_from_energy_gradient(energy_gradient_from_encoding(p, encode(p, g), C));
}

SurrogateModel::SurrogateModel(const ModelParams& params, const GraphInput* graph)
    : params_(&params), encoded_(encode(params, graph)) {}

double SurrogateModel::energy(const Voigt& C) const { return energy_from_encoding(*params_, encoded_, C); }

Voigt SurrogateModel::energy_gradient(const Voigt& C) const {
    return energy_gradient_from_encoding(*params_, encoded_, C);
}

Voigt SurrogateModel::stress(const Voigt& C) const { return stress_from_energy_gradient(energy_gradient(C)); }

std::string to_string(LossKind k) { return k == LossKind::L2 ? "L2" : "H1"; }

LossResult loss_and_param_grads(const ModelParams& p, std::span<const GraphInput> graphs,
                                std::span<const LabeledPoint> batch, const LossOptions& opts) {
    if (batch.empty()) throw std::invalid_argument("loss: empty batch");
    const bool use_graph = p.arch.use_graph;
    const std::size_t n_params = parameter_count(p);
    const std::size_t gb = graph_branch_parameter_count(p);
    const std::size_t n_mlp = mlp_parameter_count(p);
    const std::size_t ne = use_graph ? std::size_t(p.arch.encoded_dim) : 0;
    const double s_psi = p.norm.psi_scale;
    const double inv_b = 1.0 / double(batch.size());
    const double inv_s2 = 1.0 / (s_psi * s_psi);
    const bool h1 = opts.kind == LossKind::H1 && opts.gradient_weight != 0.0;

    LossResult r;
    r.grad.assign(n_params, 0.0);

    std::vector<std::optional<GcnOutput>> enc;
    std::vector<Eigen::VectorXd> enc_adjoint;
    if (use_graph) {
        enc.resize(graphs.size());
        enc_adjoint.assign(graphs.size(), Eigen::VectorXd::Zero(p.arch.encoded_dim));
        // encode in order of first appearance so dropout draws are reproducible
        for (const auto& pt : batch) {
            if (pt.graph >= graphs.size()) throw std::invalid_argument("loss: graph index out of range");
            if (!enc[pt.graph]) enc[pt.graph] = gcn_branch(p, graphs[pt.graph], opts.dropout_rng);
        }
    }

    std::vector<double> gp(n_mlp), gx;
    std::vector<Dual> gp_dual(n_mlp), gx_dual;
    for (const auto& pt : batch) {
        const Eigen::VectorXd empty;
        const auto x = network_input(p, use_graph ? enc[pt.graph]->encoded : empty, pt.C);
        const double y = mlp_backprop(p, x, gp, gx);
        const double err = s_psi * y - pt.psi;
        r.energy_loss += err * err * inv_s2 * inv_b;

        // d loss / d y through the energy term
        const double c_energy = 2.0 * err * inv_s2 * inv_b * s_psi;
        for (std::size_t i = 0; i < n_mlp; ++i) r.grad[gb + i] += c_energy * gp[i];
        Eigen::VectorXd adj = Eigen::VectorXd::Zero(Eigen::Index(ne));
        for (std::size_t i = 0; i < ne; ++i) adj[Eigen::Index(i)] = c_energy * gx[i];

        if (h1) {
            // residual of dpsi/dC in tensor components: off-diagonal slots of
            // the raw-component gradient carry twice the tensor component
            std::vector<Dual> xd(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) xd[i] = Dual{x[i], 0.0};
            for (int k = 0; k < 6; ++k) {
                const double m = k < 3 ? 1.0 : 0.5;
                const double g_hat = s_psi * gx[ne + std::size_t(k)] / p.norm.c_scale[k];
                const double res = m * g_hat - 0.5 * pt.S[k];
                r.gradient_loss += opts.gradient_weight * res * res * inv_s2 * inv_b;
                const double dl_dg = 2.0 * opts.gradient_weight * res * m * inv_s2 * inv_b;
                xd[ne + std::size_t(k)].d = dl_dg * s_psi / p.norm.c_scale[k];
            }
            mlp_backprop(p, xd, gp_dual, gx_dual);
            for (std::size_t i = 0; i < n_mlp; ++i) r.grad[gb + i] += gp_dual[i].d;
            for (std::size_t i = 0; i < ne; ++i) adj[Eigen::Index(i)] += gx_dual[i].d;
        }
        if (use_graph) enc_adjoint[pt.graph] += adj;
    }

    if (use_graph) {
        for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
            if (enc[gi]) gcn_backward(p, graphs[gi], enc[gi]->trace, enc_adjoint[gi], r.grad);
        }
    }

    r.data_loss = r.energy_loss + r.gradient_loss;
    r.loss = r.data_loss;
    if (use_graph && p.l2_coefficient > 0.0) {
        std::size_t offset = 0;
        auto regularize = [&](const DenseLayer& l) {
            for (Eigen::Index i = 0; i < l.W.rows(); ++i) {
                for (Eigen::Index j = 0; j < l.W.cols(); ++j) {
                    const double w = l.W(i, j);
                    r.loss += 0.5 * p.l2_coefficient * w * w;
                    r.grad[offset + std::size_t(i * l.W.cols() + j)] += p.l2_coefficient * w;
                }
            }
            offset += layer_size(l);
        };
        for (const auto& l : p.gcn) regularize(l);
        for (const auto& l : p.encoder) regularize(l);
    }
    if (!std::isfinite(r.loss)) throw NumericError("loss: non-finite value in forward pass");
    return r;
}

}  // namespace polygnn
