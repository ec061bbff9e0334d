#include "polygnn/config.hpp"

#include "polygnn/errors.hpp"
#include "polygnn/io.hpp"

#include <json.hpp>

#include <numbers>
#include <set>

namespace polygnn {

using json = nlohmann::json;

namespace {

class Section {
public:
    Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
        if (!j_.is_object()) throw ConfigError(name_ + ": expected an object");
    }

    template <typename T>
    void get(const char* key, T& out) {
        if (!j_.contains(key)) return;
        used_.insert(key);
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(name_ + "." + key + ": " + e.what());
        }
    }

    template <typename E, typename Parse>
    void get_enum(const char* key, E& out, Parse parse) {
        std::string s;
        if (!j_.contains(key)) return;
        get(key, s);
        try {
            out = parse(s);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(name_ + "." + key + ": " + e.what());
        }
    }

    Section child(const char* key) {
        used_.insert(key);
        static const json empty = json::object();
        return Section(j_.contains(key) ? j_.at(key) : empty, name_.empty() ? key : name_ + "." + key);
    }

    void finish() const {
        for (const auto& [k, v] : j_.items()) {
            if (!used_.count(k)) throw ConfigError("unknown configuration key: " + (name_.empty() ? k : name_ + "." + k));
        }
    }

private:
    const json& j_;
    std::string name_;
    std::set<std::string> used_;
};

FoldUnit parse_fold_unit(const std::string& s) {
    if (s == "sample") return FoldUnit::sample;
    if (s == "rve") return FoldUnit::rve;
    throw std::invalid_argument("unknown fold unit: " + s);
}

std::string to_string(FoldUnit u) { return u == FoldUnit::rve ? "rve" : "sample"; }

void require(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed configuration: ") + e.what());
    }
    RunConfig c;
    Section top(root, "");
    top.get("output_dir", c.output_dir);
    {
        auto s = top.child("generation");
        auto& g = c.generation;
        s.get("n_rves", g.n_rves);
        s.get("min_grains", g.min_grains);
        s.get("max_grains", g.max_grains);
        s.get("grid", g.grid);
        s.get("seed", g.seed);
        s.get("random_weight", g.random_weight);
        s.get("random_modal", g.random_modal);
        s.get("odf_weight", g.odf_weight);
        s.get("modal_deg", g.modal_deg);
        s.get("half_width_deg", g.half_width_deg);
        s.finish();
    }
    {
        auto s = top.child("homogenization");
        auto& h = c.homogenization;
        s.get_enum("homogenizer", h.homogenizer, parse_homogenizer);
        s.get("samples_per_rve", h.samples_per_rve);
        s.get("max_strain", h.max_strain);
        s.get("seed", h.seed);
        s.get("ref_stiffness_scale", h.ref_stiffness_scale);
        s.get("max_iter", h.max_iter);
        s.get("tol", h.tol);
        s.finish();
    }
    {
        auto s = top.child("fung");
        s.get("c", c.fung.c);
        s.get("lambda", c.fung.lambda);
        s.get("mu", c.fung.mu);
        s.finish();
    }
    {
        auto s = top.child("model");
        auto& m = c.model;
        s.get_enum("variant", m.variant, parse_variant);
        s.get("max_nodes", m.max_nodes);
        s.get("gcn_channels", m.gcn_channels);
        s.get("encoder_hidden", m.encoder_hidden);
        s.get("encoded_dim", m.encoded_dim);
        s.get("mlp_hidden", m.mlp_hidden);
        s.get_enum("propagation", m.propagation, parse_propagation_mode);
        s.finish();
    }
    {
        auto s = top.child("training");
        auto& t = c.training;
        s.get("epochs", t.epochs);
        s.get("batch_size", t.batch_size);
        s.get("learning_rate", t.learning_rate);
        s.get("patience", t.patience);
        s.get("decay", t.decay);
        s.get("min_learning_rate", t.min_learning_rate);
        s.get("validation_fraction", t.validation_fraction);
        s.get("seed", t.seed);
        s.get("dropout_rate", t.dropout_rate);
        s.get("l2_coefficient", t.l2_coefficient);
        s.get("normalize", t.normalize);
        s.get("folds", t.folds);
        s.get_enum("fold_unit", t.fold_unit, parse_fold_unit);
        s.finish();
    }
    {
        auto s = top.child("verification");
        auto& v = c.verification;
        s.get("seed", v.seed);
        s.get("objectivity_pairs", v.objectivity_pairs);
        s.get("isotropy_random_rotations", v.isotropy_random_rotations);
        s.get("isotropy_deformations", v.isotropy_deformations);
        s.get("convexity_levels", v.convexity_levels);
        s.get("convexity_pairs", v.convexity_pairs);
        s.get("convexity_slack", v.convexity_slack);
        s.get("convexity_required_fraction", v.convexity_required_fraction);
        s.get("gradient_probes", v.gradient_probes);
        s.get("mandatory", v.mandatory);
        s.finish();
    }
    {
        auto s = top.child("demo");
        auto& d = c.demo;
        s.get("g_c", d.g_c);
        s.get("l_0", d.l_0);
        s.get("eta", d.eta);
        s.get("r", d.r);
        s.get("dt", d.dt);
        s.get("n_steps", d.n_steps);
        s.get("hold_steps", d.hold_steps);
        s.get("rve", d.rve);
        s.get("rotation_deg", d.rotation_deg);
        s.get("F_end", d.F_end);
        s.finish();
    }
    top.finish();
    validate(c);
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) { return parse_run_config(read_text_file(path)); }

std::string serialize_run_config(const RunConfig& c) {
    json j;
    j["output_dir"] = c.output_dir;
    const auto& g = c.generation;
    j["generation"] = {{"n_rves", g.n_rves},
                       {"min_grains", g.min_grains},
                       {"max_grains", g.max_grains},
                       {"grid", g.grid},
                       {"seed", g.seed},
                       {"random_weight", g.random_weight},
                       {"random_modal", g.random_modal},
                       {"odf_weight", g.odf_weight},
                       {"modal_deg", g.modal_deg},
                       {"half_width_deg", g.half_width_deg}};
    const auto& h = c.homogenization;
    j["homogenization"] = {{"homogenizer", to_string(h.homogenizer)},
                           {"samples_per_rve", h.samples_per_rve},
                           {"max_strain", h.max_strain},
                           {"seed", h.seed},
                           {"ref_stiffness_scale", h.ref_stiffness_scale},
                           {"max_iter", h.max_iter},
                           {"tol", h.tol}};
    j["fung"] = {{"c", c.fung.c}, {"lambda", c.fung.lambda}, {"mu", c.fung.mu}};
    const auto& m = c.model;
    j["model"] = {{"variant", to_string(m.variant)},
                  {"max_nodes", m.max_nodes},
                  {"gcn_channels", m.gcn_channels},
                  {"encoder_hidden", m.encoder_hidden},
                  {"encoded_dim", m.encoded_dim},
                  {"mlp_hidden", m.mlp_hidden},
                  {"propagation", to_string(m.propagation)}};
    const auto& t = c.training;
    j["training"] = {{"epochs", t.epochs},
                     {"batch_size", t.batch_size},
                     {"learning_rate", t.learning_rate},
                     {"patience", t.patience},
                     {"decay", t.decay},
                     {"min_learning_rate", t.min_learning_rate},
                     {"validation_fraction", t.validation_fraction},
                     {"seed", t.seed},
                     {"dropout_rate", t.dropout_rate},
                     {"l2_coefficient", t.l2_coefficient},
                     {"normalize", t.normalize},
                     {"folds", t.folds},
                     {"fold_unit", to_string(t.fold_unit)}};
    const auto& v = c.verification;
    j["verification"] = {{"seed", v.seed},
                         {"objectivity_pairs", v.objectivity_pairs},
                         {"isotropy_random_rotations", v.isotropy_random_rotations},
                         {"isotropy_deformations", v.isotropy_deformations},
                         {"convexity_levels", v.convexity_levels},
                         {"convexity_pairs", v.convexity_pairs},
                         {"convexity_slack", v.convexity_slack},
                         {"convexity_required_fraction", v.convexity_required_fraction},
                         {"gradient_probes", v.gradient_probes},
                         {"mandatory", v.mandatory}};
    const auto& d = c.demo;
    j["demo"] = {{"g_c", d.g_c},   {"l_0", d.l_0},         {"eta", d.eta},
                 {"r", d.r},       {"dt", d.dt},           {"n_steps", d.n_steps},
                 {"hold_steps", d.hold_steps}, {"rve", d.rve}, {"rotation_deg", d.rotation_deg},
                 {"F_end", d.F_end}};
    return j.dump(2) + "\n";
}

void validate(const RunConfig& c) {
    const auto& g = c.generation;
    require(g.n_rves >= 1, "generation.n_rves must be >= 1");
    require(g.min_grains >= 1 && g.max_grains >= g.min_grains, "generation: need 1 <= min_grains <= max_grains");
    require(g.grid >= 2, "generation.grid must be >= 2");
    require(std::size_t(g.max_grains) <= std::size_t(g.grid) * g.grid * g.grid,
            "generation: more grains than voxels");
    require(g.odf_weight >= 0.0 && g.odf_weight <= 1.0, "generation.odf_weight must lie in [0,1]");
    require(g.half_width_deg > 0.0, "generation.half_width_deg must be positive");
    const auto& h = c.homogenization;
    require(h.samples_per_rve >= 1, "homogenization.samples_per_rve must be >= 1");
    require(h.max_strain >= 0.0, "homogenization.max_strain must be >= 0");
    try {
        validate(fft_config(h));
        validate(fung_constants(c.fung));
        validate(architecture(c.model));
        validate(train_config(c));
        validate(phase_field_params(c.demo));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    require(c.model.max_nodes >= g.max_grains || !uses_graph(c.model.variant),
            "model.max_nodes must be at least generation.max_grains");
    const auto& t = c.training;
    require(t.folds == 0 || t.folds >= 2, "training.folds must be 0 or >= 2");
    const auto& v = c.verification;
    require(v.objectivity_pairs >= 1 && v.gradient_probes >= 1 && v.convexity_pairs >= 1 &&
                v.isotropy_deformations >= 1 && v.isotropy_random_rotations >= 0 && v.convexity_levels >= 2,
            "verification: counts out of range");
    require(v.convexity_required_fraction >= 0.0 && v.convexity_required_fraction <= 1.0,
            "verification.convexity_required_fraction must lie in [0,1]");
    for (const auto& name : v.mandatory) {
        require(name == "objectivity" || name == "anisotropy" || name == "convexity" || name == "gradient",
                "verification.mandatory: unknown check '" + name + "'");
    }
    const auto& d = c.demo;
    require(d.n_steps >= 1 && d.hold_steps >= 0, "demo: bad step counts");
    require(d.rve >= 0 && d.rve < g.n_rves, "demo.rve out of range");
    require(Eigen::Map<const Mat3>(d.F_end.data()).determinant() > 0.0, "demo.F_end must have positive determinant");
}

FungConstants fung_constants(const FungConfig& c) {
    FungConstants k;
    k.c = c.c;
    k.lambda = Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(c.lambda.data());
    k.mu = Vec3(c.mu[0], c.mu[1], c.mu[2]);
    return k;
}

FftConfig fft_config(const HomogenizationConfig& c) { return {c.ref_stiffness_scale, c.max_iter, c.tol}; }

Architecture architecture(const ModelConfig& c) {
    Architecture a;
    a.use_graph = uses_graph(c.variant);
    a.max_nodes = c.max_nodes;
    a.gcn_channels = c.gcn_channels;
    a.encoder_hidden = c.encoder_hidden;
    a.encoded_dim = c.encoded_dim;
    a.mlp_hidden = c.mlp_hidden;
    a.propagation = c.propagation;
    return a;
}

TrainConfig train_config(const RunConfig& c) {
    TrainConfig t;
    const auto& s = c.training;
    t.variant = c.model.variant;
    t.epochs = s.epochs;
    t.batch_size = s.batch_size;
    t.learning_rate = s.learning_rate;
    t.patience = s.patience;
    t.decay = s.decay;
    t.min_learning_rate = s.min_learning_rate;
    t.validation_fraction = s.validation_fraction;
    t.seed = s.seed;
    t.arch = architecture(c.model);
    t.dropout_rate = s.dropout_rate;
    t.l2_coefficient = s.l2_coefficient;
    t.normalize = s.normalize;
    return t;
}

PhaseFieldParams phase_field_params(const DemoConfig& c) { return {c.g_c, c.l_0, c.eta, c.r, c.dt}; }

}  // namespace polygnn
