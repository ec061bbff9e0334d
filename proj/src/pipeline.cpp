#include "polygnn/pipeline.hpp"

#include "polygnn/errors.hpp"
#include "polygnn/io.hpp"
#include "polygnn/metrics.hpp"
#include "polygnn/phasefield.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <iostream>
#include <numbers>
#include <sstream>
#include <thread>

#ifndef POLYGNN_VERSION
#define POLYGNN_VERSION "0.0.0"
#endif

namespace polygnn {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

fs::path out_dir(const RunConfig& cfg) { return fs::path(cfg.output_dir); }

std::string rve_name(int r) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "rve_%03d", r);
    return buf;
}

std::string hex64(std::uint64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void write_run_metadata(const RunConfig& cfg, const RunOptions& opts, const std::string& command,
                        std::map<std::string, std::string> extra = {}) {
    const std::string text = serialize_run_config(cfg);
    extra["command"] = command;
    extra["version"] = POLYGNN_VERSION;
    extra["config_hash"] = hex64(fnv1a64(text));
    extra["config_source"] = opts.config_path.empty() ? "-" : opts.config_path;
    extra["seed.generation"] = std::to_string(cfg.generation.seed);
    extra["seed.homogenization"] = std::to_string(cfg.homogenization.seed);
    extra["seed.training"] = std::to_string(cfg.training.seed);
    extra["seed.verification"] = std::to_string(cfg.verification.seed);
    extra["threads"] = std::to_string(opts.threads);
    write_metadata(out_dir(cfg) / (command + "_metadata.txt"), extra);
    write_text_file(out_dir(cfg) / (command + "_config.json"), text);
}

template <typename Fn>
void parallel_for(int n, int threads, Fn fn) {
    if (threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
    std::vector<std::thread> pool;
    for (int t = 0; t < std::min(threads, n); ++t) {
        pool.emplace_back([&] {
            for (int i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    errors[std::size_t(i)] = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::vector<DeformationSample> load_dataset(const RunConfig& cfg) {
    const auto meta = read_metadata(out_dir(cfg) / "dataset.meta");
    const auto it = meta.find("homogenizer");
    if (it == meta.end()) throw IoError("dataset.meta: missing homogenizer entry");
    return read_dataset_csv(out_dir(cfg) / "dataset.csv");
}

std::map<int, Polycrystal> family_map(const std::vector<Polycrystal>& family) {
    std::map<int, Polycrystal> m;
    for (std::size_t r = 0; r < family.size(); ++r) m.emplace(int(r), family[r]);
    return m;
}

std::vector<DeformationSample> select(const std::vector<DeformationSample>& samples, const std::vector<int>& folds,
                                      int fold, bool in_fold) {
    std::vector<DeformationSample> out;
    for (std::size_t i = 0; i < samples.size(); ++i)
        if ((folds[i] == fold) == in_fold) out.push_back(samples[i]);
    return out;
}

fs::path fold_dir(const RunConfig& cfg, int fold) {
    return fold < 0 ? out_dir(cfg) : out_dir(cfg) / ("fold_" + std::to_string(fold));
}

ModelParams load_model(const RunConfig& cfg, const RunOptions& opts, int fold) {
    if (opts.untrained) return initial_model(train_config(cfg));
    const auto arch = architecture(cfg.model);
    const fs::path path = opts.checkpoint ? *opts.checkpoint : fold_dir(cfg, fold) / "model.ckpt";
    return load_checkpoint(path, &arch);
}

int n_folds(const RunConfig& cfg) { return cfg.training.folds >= 2 ? cfg.training.folds : 0; }

std::vector<int> fold_assignment(const RunConfig& cfg, const std::vector<DeformationSample>& samples) {
    return kfold_samples(samples, cfg.training.folds, cfg.training.fold_unit, cfg.training.seed);
}

void write_ecdf(const fs::path& path, std::span<const double> values) {
    CsvWriter w(path, {"mse", "F"});
    for (const auto& [x, F] : ecdf(values).steps()) {
        w << x << F;
        w.end_row();
    }
}

void write_surface(const fs::path& path, const EnergyFunction& f, const Mat3& Q) {
    CsvWriter w(path, {"F11", "F12", "psi", "S11", "S22", "S33", "S12", "S23", "S13"});
    for (const auto& p : response_surface(f, 0, 1, 0.0, 0.1, 21, Q)) {
        w << p.a << p.b << p.psi;
        for (int k = 0; k < 6; ++k) w << p.S[k];
        w.end_row();
    }
}

std::vector<std::vector<std::string>> read_csv_rows(const fs::path& path) {
    std::istringstream in(read_text_file(path));
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) row.push_back(cell);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

double mean(std::span<const double> v) {
    if (v.empty()) throw std::invalid_argument("mean of empty series");
    double s = 0.0;
    for (double x : v) s += x;
    return s / double(v.size());
}

double median(std::span<const double> v) {
    if (v.empty()) throw std::invalid_argument("median of empty series");
    std::vector<double> s(v.begin(), v.end());
    std::sort(s.begin(), s.end());
    const std::size_t n = s.size();
    return n % 2 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
}

std::vector<Polycrystal> generate_family(const GenerationConfig& g) {
    std::vector<Polycrystal> out;
    for (int r = 0; r < g.n_rves; ++r) {
        std::mt19937_64 rng(mix_seed(g.seed, std::uint64_t(r), 0x6e));
        const int n = std::uniform_int_distribution<int>(g.min_grains, g.max_grains)(rng);
        auto p = generate_polycrystal(mix_seed(g.seed, std::uint64_t(r)), n, {g.grid, g.grid, g.grid});
        OdfParams odf;
        odf.weight = g.random_weight ? std::uniform_real_distribution<double>(0.0, 1.0)(rng) : g.odf_weight;
        odf.modal = g.random_modal ? orientation_from_rotation(random_rotation(rng))
                                   : Orientation{g.modal_deg[0] * kDeg, g.modal_deg[1] * kDeg, g.modal_deg[2] * kDeg};
        odf.half_width = g.half_width_deg * kDeg;
        p.orientations = sample_orientations(mix_seed(g.seed, std::uint64_t(r), 0x0d), n, odf);
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<Polycrystal> load_family(const RunConfig& cfg) {
    std::vector<Polycrystal> out;
    for (int r = 0; r < cfg.generation.n_rves; ++r)
        out.push_back(load_polycrystal(out_dir(cfg) / "rves" / (rve_name(r) + ".pxtl")));
    return out;
}

void run_gen(const RunConfig& cfg, const RunOptions& opts) {
    const auto family = generate_family(cfg.generation);
    std::vector<int> ids;
    for (std::size_t r = 0; r < family.size(); ++r) {
        ids.push_back(int(r));
        save_polycrystal(out_dir(cfg) / "rves" / (rve_name(int(r)) + ".pxtl"), family[r]);
        const auto c = contacts(family[r]);
        write_graph_file(out_dir(cfg) / "graphs" / (rve_name(int(r)) + ".graph"), build_graph(family[r].n_grains(), c));
    }
    DatasetOptions d;
    d.samples_per_rve = cfg.homogenization.samples_per_rve;
    d.homogenizer = cfg.homogenization.homogenizer;
    d.master_seed = cfg.homogenization.seed;
    d.max_strain_component = cfg.homogenization.max_strain;
    d.fft = fft_config(cfg.homogenization);
    d.constants = fung_constants(cfg.fung);
    const auto samples = build_dataset(family, ids, d);
    write_dataset_csv(out_dir(cfg) / "dataset.csv", samples);
    write_metadata(out_dir(cfg) / "dataset.meta", {{"homogenizer", to_string(d.homogenizer)},
                                                   {"samples_per_rve", std::to_string(d.samples_per_rve)},
                                                   {"master_seed", std::to_string(d.master_seed)},
                                                   {"max_strain_component", format_double(d.max_strain_component)},
                                                   {"rows", std::to_string(samples.size())}});
    write_run_metadata(cfg, opts, "gen", {{"rows", std::to_string(samples.size())}});
}

void run_train(const RunConfig& cfg, const RunOptions& opts) {
    const auto family = family_map(load_family(cfg));
    const auto samples = load_dataset(cfg);
    const auto tc = train_config(cfg);
    const auto mode = cfg.model.propagation;

    auto train_one = [&](const std::vector<DeformationSample>& subset, const fs::path& dir) {
        const auto data = make_training_data(subset, family, mode);
        const auto result = train(tc, data);
        save_checkpoint(result.params, dir / "model.ckpt");
        CsvWriter w(dir / "history.csv", {"epoch", "train_loss", "validation_loss", "learning_rate"});
        for (const auto& e : result.history) {
            w << e.epoch << e.train_loss << e.validation_loss << e.learning_rate;
            w.end_row();
        }
    };

    const int k = n_folds(cfg);
    if (k == 0) {
        train_one(samples, out_dir(cfg));
    } else {
        const auto folds = fold_assignment(cfg, samples);
        {
            CsvWriter w(out_dir(cfg) / "folds.csv", {"sample", "rve_id", "fold"});
            for (std::size_t i = 0; i < samples.size(); ++i) {
                w << i << samples[i].rve_id << folds[i];
                w.end_row();
            }
        }
        parallel_for(k, opts.threads, [&](int f) { train_one(select(samples, folds, f, false), fold_dir(cfg, f)); });
    }
    write_run_metadata(cfg, opts, "train", {{"variant", to_string(cfg.model.variant)}, {"folds", std::to_string(k)}});
}

void run_eval(const RunConfig& cfg, const RunOptions& opts) {
    const auto family_vec = load_family(cfg);
    const auto family = family_map(family_vec);
    const auto samples = load_dataset(cfg);
    const auto mode = cfg.model.propagation;
    const int k = n_folds(cfg);
    const auto folds = k ? fold_assignment(cfg, samples) : std::vector<int>(samples.size(), 0);

    struct Row {
        int fold;
        std::string split;
        GroupMetrics m;
    };
    std::vector<std::vector<Row>> per_fold(std::size_t(std::max(k, 1)));
    parallel_for(std::max(k, 1), opts.threads, [&](int f) {
        const auto params = load_model(cfg, opts, k ? f : -1);
        auto add = [&](const std::vector<DeformationSample>& subset, const std::string& split) {
            if (subset.empty()) return;
            for (const auto& g : evaluate_groups(params, make_training_data(subset, family, mode)))
                per_fold[std::size_t(f)].push_back({f, split, g});
        };
        if (k) {
            add(select(samples, folds, f, false), "train");
            add(select(samples, folds, f, true), "test");
        } else {
            add(samples, "train");
        }
    });

    CsvWriter w(out_dir(cfg) / "metrics.csv",
                {"fold", "split", "rve_id", "n_samples", "psi", "principal_values", "principal_directions"});
    std::map<std::string, std::map<std::string, std::vector<double>>> series;
    for (const auto& rows : per_fold) {
        for (const auto& r : rows) {
            w << r.fold << r.split << r.m.rve_id << r.m.n_samples << r.m.psi << r.m.principal_values
              << r.m.principal_directions;
            w.end_row();
            series[r.split]["psi"].push_back(r.m.psi);
            series[r.split]["principal_values"].push_back(r.m.principal_values);
            series[r.split]["principal_directions"].push_back(r.m.principal_directions);
        }
    }
    w.close();
    for (const auto& [split, metrics] : series)
        for (const auto& [name, values] : metrics) write_ecdf(out_dir(cfg) / ("ecdf_" + split + "_" + name + ".csv"), values);

    const auto params = load_model(cfg, opts, k ? 0 : -1);
    const GraphInput graph = make_graph_input(family_vec.front(), mode);
    const SurrogateModel model(params, params.arch.use_graph ? &graph : nullptr);
    const auto f = surrogate_energy(model);
    for (int deg : {0, 30, 60})
        write_surface(out_dir(cfg) / ("surface_rve_000_rot" + std::to_string(deg) + ".csv"), f,
                      rotation_about_z(deg * kDeg));
    write_run_metadata(cfg, opts, "eval", {{"scaled_mse_range", "true-series min/max"}});
}

bool run_verify(const RunConfig& cfg, const RunOptions& opts) {
    const auto family = load_family(cfg);
    const auto params = load_model(cfg, opts, n_folds(cfg) ? 0 : -1);
    const auto& v = cfg.verification;
    const auto mode = cfg.model.propagation;

    std::vector<Mat3> deformations;
    {
        std::mt19937_64 rng(mix_seed(v.seed, 0x15d));
        for (int i = 0; i < v.isotropy_deformations; ++i)
            deformations.push_back(sample_deformation(rng, cfg.homogenization.max_strain));
    }
    const auto rotations = isotropy_rotations(v.isotropy_random_rotations, v.seed);
    const auto probes = random_probes(v.gradient_probes, v.seed, cfg.homogenization.max_strain);

    CsvWriter w(out_dir(cfg) / "checks.csv",
                {"rve_id", "check", "n_cases", "max_deviation", "fraction_satisfied", "threshold", "passed", "mandatory"});
    bool ok = true;
    const int n_models = params.arch.use_graph ? int(family.size()) : 1;
    for (int r = 0; r < n_models; ++r) {
        const GraphInput graph = make_graph_input(family[std::size_t(r)], mode);
        const SurrogateModel model(params, params.arch.use_graph ? &graph : nullptr);
        const auto f = surrogate_energy(model);
        ConvexityOptions co;
        co.levels = v.convexity_levels;
        co.max_strain = cfg.homogenization.max_strain;
        co.n_pairs = v.convexity_pairs;
        co.slack = v.convexity_slack;
        co.seed = mix_seed(v.seed, std::uint64_t(r));
        const auto pairs = convexity_pairs(f, co);
        {
            CsvWriter s(out_dir(cfg) / ("convexity_" + rve_name(r) + ".csv"), {"rhs", "lhs_minus_rhs"});
            for (std::size_t i = 0; i < std::min<std::size_t>(100, pairs.size()); ++i) {
                s << pairs[i].rhs << pairs[i].margin;
                s.end_row();
            }
        }
        const std::vector<CheckReport> reports = {
            check_objectivity(f, v.objectivity_pairs, v.seed, cfg.homogenization.max_strain),
            check_isotropy(f, deformations, rotations),
            check_convexity(f, co, v.convexity_required_fraction),
            gradient_check(f, probes),
        };
        for (const auto& rep : reports) {
            const bool mandatory = std::find(v.mandatory.begin(), v.mandatory.end(), rep.name) != v.mandatory.end();
            if (mandatory && !rep.passed) ok = false;
            w << (params.arch.use_graph ? r : -1) << rep.name << rep.n_cases << rep.max_deviation
              << rep.fraction_satisfied << rep.threshold << (rep.passed ? 1 : 0) << (mandatory ? 1 : 0);
            w.end_row();
        }
    }
    w.close();
    write_run_metadata(cfg, opts, "verify", {{"passed", ok ? "1" : "0"}, {"untrained", opts.untrained ? "1" : "0"}});
    return ok;
}

void run_demo(const RunConfig& cfg, const RunOptions& opts) {
    const auto& d = cfg.demo;
    const Polycrystal rve = load_polycrystal(out_dir(cfg) / "rves" / (rve_name(d.rve) + ".pxtl"));
    const Mat3 F_end = Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(d.F_end.data());
    const Mat3 Q = rotation_about_z(d.rotation_deg * kDeg);

    std::vector<RampRecord> records;
    if (opts.oracle) {
        records = run_ramp(taylor_energy_function(rve, fung_constants(cfg.fung)), F_end, d.n_steps, d.hold_steps,
                           phase_field_params(d), Q);
    } else {
        const auto params = load_model(cfg, opts, n_folds(cfg) ? 0 : -1);
        const GraphInput graph = make_graph_input(rve, cfg.model.propagation);
        const SurrogateModel model(params, params.arch.use_graph ? &graph : nullptr);
        records = run_ramp(surrogate_energy(model), F_end, d.n_steps, d.hold_steps, phase_field_params(d), Q);
    }
    CsvWriter w(out_dir(cfg) / "phasefield.csv",
                {"t", "psi_plus", "H", "d", "P11", "P12", "P13", "P21", "P22", "P23", "P31", "P32", "P33"});
    for (const auto& r : records) {
        w << r.t << r.psi_plus << r.H << r.d;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) w << r.P(i, j);
        w.end_row();
    }
    w.close();
    write_run_metadata(cfg, opts, "demo-phasefield", {{"energy", opts.oracle ? "fung-taylor" : "surrogate"}});
}

void run_report(const RunConfig& cfg, const RunOptions& opts) {
    CsvWriter w(out_dir(cfg) / "summary.csv", {"section", "key", "value"});
    const auto metrics_path = out_dir(cfg) / "metrics.csv";
    if (fs::exists(metrics_path)) {
        std::map<std::string, std::vector<double>> cols;
        const auto rows = read_csv_rows(metrics_path);
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const auto& r = rows[i];
            if (r.size() != 7) throw IoError("metrics.csv: malformed row");
            cols[r[1] + ".psi"].push_back(std::stod(r[4]));
            cols[r[1] + ".principal_values"].push_back(std::stod(r[5]));
            cols[r[1] + ".principal_directions"].push_back(std::stod(r[6]));
        }
        for (const auto& [key, values] : cols) {
            w << std::string("metrics") << key + ".median" << median(values);
            w.end_row();
            w << std::string("metrics") << key + ".mean" << mean(values);
            w.end_row();
        }
    }
    const auto checks_path = out_dir(cfg) / "checks.csv";
    if (fs::exists(checks_path)) {
        std::map<std::string, std::pair<int, int>> tally;
        const auto rows = read_csv_rows(checks_path);
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const auto& r = rows[i];
            if (r.size() != 8) throw IoError("checks.csv: malformed row");
            auto& t = tally[r[1]];
            (r[6] == "1" ? t.first : t.second)++;
        }
        for (const auto& [name, t] : tally) {
            w << std::string("checks") << name + ".passed" << t.first;
            w.end_row();
            w << std::string("checks") << name + ".failed" << t.second;
            w.end_row();
        }
    }
    w.close();
    write_run_metadata(cfg, opts, "report");
}

int run_command(const std::string& command, const RunConfig& cfg, const RunOptions& opts) {
    try {
        if (command == "gen") run_gen(cfg, opts);
        else if (command == "train") run_train(cfg, opts);
        else if (command == "eval") run_eval(cfg, opts);
        else if (command == "verify") return run_verify(cfg, opts) ? 0 : 5;
        else if (command == "demo-phasefield") run_demo(cfg, opts);
        else if (command == "report") run_report(cfg, opts);
        else throw ConfigError("unknown command: " + command);
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return 3;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return 4;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace polygnn
