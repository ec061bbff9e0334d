#include "polygnn/errors.hpp"
#include "polygnn/pipeline.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"polygnn: graph-enhanced hyperelastic surrogates for polycrystals"};
    app.require_subcommand(1, 1);
    app.fallthrough();

    std::string config_path;
    std::string output;
    int threads = 1;
    int epochs = -1;
    std::string checkpoint;
    bool untrained = false;
    bool oracle = false;
    bool paper_scale = false;

    app.add_option("-c,--config", config_path, "JSON run configuration (defaults when omitted)");
    app.add_option("-o,--output", output, "Override output_dir");
    app.add_option("--threads", threads, "Worker threads for independent folds")->check(CLI::PositiveNumber);
    app.add_option("--epochs", epochs, "Override training.epochs")->check(CLI::NonNegativeNumber);
    app.add_option("--checkpoint", checkpoint, "Checkpoint for eval/verify/demo-phasefield");
    app.add_flag("--untrained", untrained, "Use the initialization instead of a checkpoint");
    app.add_flag("--paper-scale", paper_scale, "49^3 grids with 40-50 grains per RVE");
    app.add_flag("--oracle", oracle, "demo-phasefield: use the homogenized Fung energy");

    for (const char* name : {"gen", "train", "eval", "verify", "demo-phasefield", "report"}) app.add_subcommand(name);
    app.add_subcommand("print-config", "Print the effective configuration");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    polygnn::RunConfig cfg;
    try {
        if (!config_path.empty()) cfg = polygnn::load_run_config(config_path);
        if (!output.empty()) cfg.output_dir = output;
        if (epochs >= 0) cfg.training.epochs = epochs;
        if (paper_scale) {
            cfg.generation.grid = 49;
            cfg.generation.min_grains = 40;
            cfg.generation.max_grains = 50;
            cfg.model.max_nodes = std::max(cfg.model.max_nodes, 50);
        }
        polygnn::validate(cfg);
    } catch (const polygnn::IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return 3;
    } catch (const polygnn::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }
    if (command == "print-config") {
        std::cout << polygnn::serialize_run_config(cfg);
        return 0;
    }

    polygnn::RunOptions opts;
    opts.threads = threads;
    if (!checkpoint.empty()) opts.checkpoint = checkpoint;
    opts.untrained = untrained;
    opts.oracle = oracle;
    opts.config_path = config_path;
    return polygnn::run_command(command, cfg, opts);
}
