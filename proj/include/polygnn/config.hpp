#pragma once

#include "polygnn/fung.hpp"
#include "polygnn/homogenization.hpp"
#include "polygnn/phasefield.hpp"
#include "polygnn/training.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace polygnn {

struct GenerationConfig {
    int n_rves = 1;
    int min_grains = 10;
    int max_grains = 20;
    int grid = 16;  // voxels per edge
    std::uint64_t seed = 0;
    bool random_weight = false;  // per-RVE uniform-ODF weight ~ U[0,1] instead of odf_weight
    bool random_modal = false;   // per-RVE uniformly random modal orientation instead of modal_deg
    double odf_weight = 0.66;
    std::array<double, 3> modal_deg = {207.1, 17.8, 159.0};
    double half_width_deg = 10.0;
    bool operator==(const GenerationConfig&) const = default;
};

struct HomogenizationConfig {
    Homogenizer homogenizer = Homogenizer::taylor;
    int samples_per_rve = 200;
    double max_strain = 0.1;
    std::uint64_t seed = 0;
    double ref_stiffness_scale = 2.0;
    int max_iter = 500;
    double tol = 1e-8;
    bool operator==(const HomogenizationConfig&) const = default;
};

struct FungConfig {
    double c = 2.0;
    std::array<double, 9> lambda = {0.6, 0.7, 0.6, 0.7, 1.4, 0.7, 0.6, 0.7, 0.5};
    std::array<double, 3> mu = {0.1, 0.7, 0.5};
    bool operator==(const FungConfig&) const = default;
};

struct ModelConfig {
    Variant variant = Variant::M_H1_reg;
    int max_nodes = 50;
    std::vector<int> gcn_channels = {32, 64};
    std::vector<int> encoder_hidden = {64};
    int encoded_dim = 9;
    std::vector<int> mlp_hidden = {64, 64};
    PropagationMode propagation = PropagationMode::renormalized_adjacency;
    bool operator==(const ModelConfig&) const = default;
};

struct TrainingConfig {
    int epochs = 500;
    int batch_size = 32;
    double learning_rate = 1e-3;
    int patience = 20;
    double decay = 0.5;
    double min_learning_rate = 1e-6;
    double validation_fraction = 0.1;
    std::uint64_t seed = 0;
    double dropout_rate = 0.2;
    double l2_coefficient = 1e-4;
    bool normalize = true;
    int folds = 0;  // 0: single run on all data; k >= 2: k-fold cross validation
    FoldUnit fold_unit = FoldUnit::sample;
    bool operator==(const TrainingConfig&) const = default;
};

struct VerificationConfig {
    std::uint64_t seed = 0;
    int objectivity_pairs = 100;
    int isotropy_random_rotations = 3;
    int isotropy_deformations = 5;
    int convexity_levels = 3;
    int convexity_pairs = 10000;
    double convexity_slack = 1e-10;
    double convexity_required_fraction = 0.99;
    int gradient_probes = 50;
    std::vector<std::string> mandatory = {"objectivity", "gradient"};
    bool operator==(const VerificationConfig&) const = default;
};

struct DemoConfig {
    double g_c = 1e-3;
    double l_0 = 1.2e-3;
    double eta = 1e-6;
    double r = 0.0;
    double dt = 5e-8;
    int n_steps = 200;
    int hold_steps = 200;
    int rve = 0;
    double rotation_deg = 0.0;  // about z, applied to the material
    std::array<double, 9> F_end = {1.1, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0};
    bool operator==(const DemoConfig&) const = default;
};

struct RunConfig {
    std::string output_dir = "run";
    GenerationConfig generation;
    HomogenizationConfig homogenization;
    FungConfig fung;
    ModelConfig model;
    TrainingConfig training;
    VerificationConfig verification;
    DemoConfig demo;
    bool operator==(const RunConfig&) const = default;
};

/// Throws ConfigError on unknown keys, wrong types or out-of-range values.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string serialize_run_config(const RunConfig& cfg);
void validate(const RunConfig& cfg);

FungConstants fung_constants(const FungConfig& c);
FftConfig fft_config(const HomogenizationConfig& c);
Architecture architecture(const ModelConfig& c);
TrainConfig train_config(const RunConfig& c);
PhaseFieldParams phase_field_params(const DemoConfig& c);

}  // namespace polygnn
