#pragma once

#include "polygnn/config.hpp"
#include "polygnn/verification.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace polygnn {

/// RVE family described by the generation section; RVE r has id r.
std::vector<Polycrystal> generate_family(const GenerationConfig& g);

struct RunOptions {
    int threads = 1;
    std::optional<std::filesystem::path> checkpoint;  // default: <output_dir>/model.ckpt
    bool untrained = false;  // verify / demo with the initialization instead of a checkpoint
    bool oracle = false;     // demo with the homogenized Fung energy instead of the network
    std::string config_path;
};

/// RVE files, graph files, dataset CSV.
void run_gen(const RunConfig& cfg, const RunOptions& opts = {});
/// Checkpoint(s) and history CSV(s); one sub-directory per fold when training.folds >= 2.
void run_train(const RunConfig& cfg, const RunOptions& opts = {});
/// Per-RVE metric CSV, eCDF CSVs and a response surface for the first RVE.
void run_eval(const RunConfig& cfg, const RunOptions& opts = {});
/// CheckReport CSV; returns false if a mandatory check failed.
bool run_verify(const RunConfig& cfg, const RunOptions& opts = {});
/// Time series of a strain ramp at one material point.
void run_demo(const RunConfig& cfg, const RunOptions& opts = {});
/// Merges metrics and checks into summary.csv.
void run_report(const RunConfig& cfg, const RunOptions& opts = {});

/// Dispatches a subcommand and maps errors onto exit codes:
/// 0 ok, 2 config, 3 I/O, 4 numeric, 5 verification failure.
int run_command(const std::string& command, const RunConfig& cfg, const RunOptions& opts);

/// Loads the RVE files written by run_gen.
std::vector<Polycrystal> load_family(const RunConfig& cfg);

/// Mean and median helpers used by the reports.
double mean(std::span<const double> v);
double median(std::span<const double> v);

}  // namespace polygnn
