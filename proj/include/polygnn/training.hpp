#pragma once

#include "polygnn/homogenization.hpp"
#include "polygnn/metrics.hpp"
#include "polygnn/microstructure.hpp"
#include "polygnn/network.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace polygnn {

/// Model / loss combinations compared in the experiments.
enum class Variant { M_L2_mlp, M_H1_mlp, M_H1_hybrid, M_H1_reg };

std::string to_string(Variant v);
Variant parse_variant(const std::string& s);
LossKind loss_kind(Variant v);
bool uses_graph(Variant v);

enum class FoldUnit { sample, rve };

struct TrainConfig {
    Variant variant = Variant::M_H1_reg;
    int epochs = 500;
    int batch_size = 32;
    double learning_rate = 1e-3;
    int patience = 20;
    double decay = 0.5;
    double min_learning_rate = 1e-6;
    double validation_fraction = 0.1;
    FoldUnit validation_unit = FoldUnit::sample;  // rve: hold out whole RVEs
    std::uint64_t seed = 0;
    Architecture arch{};  // use_graph is overridden by the variant
    double dropout_rate = 0.2;
    double l2_coefficient = 1e-4;
    bool normalize = true;  // false: identity input shift, unit scales
};

void validate(const TrainConfig& cfg);

/// Architecture, dropout and L2 settings implied by the variant.
ModelParams initial_model(const TrainConfig& cfg);

/// Graph inputs plus labelled points referencing them by index.
struct TrainingData {
    std::vector<GraphInput> graphs;
    std::vector<int> graph_rve_ids;
    std::vector<LabeledPoint> points;
    std::vector<int> point_rve_ids;
};

/// Groups samples by RVE; every referenced rve_id must be present in rves.
TrainingData make_training_data(std::span<const DeformationSample> samples, const std::map<int, Polycrystal>& rves,
                                PropagationMode mode);

/// Input shift by identity, per-component scale to unit range, energy scale max |psi|.
Normalization fit_normalization(std::span<const LabeledPoint> points);

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double validation_loss = 0.0;
    double learning_rate = 0.0;
};

struct TrainResult {
    ModelParams params;
    std::vector<EpochRecord> history;
    int best_epoch = -1;  // -1: returned parameters are the initialization
};

/// Adam with plateau decay of the learning rate; returns the parameters with
/// the lowest validation loss.
TrainResult train(const TrainConfig& cfg, const TrainingData& data);


/// Fold index in [0,k) per unit after a seeded shuffle; fold sizes differ by at most one.
std::vector<int> kfold(std::size_t n_units, int k, std::uint64_t seed);

/// Fold index per sample, grouping by RVE when unit == rve.
std::vector<int> kfold_samples(std::span<const DeformationSample> samples, int k, FoldUnit unit, std::uint64_t seed);

/// Scaled MSEs of one RVE's predictions.
struct GroupMetrics {
    int rve_id = 0;
    std::size_t n_samples = 0;
    double psi = 0.0;
    double principal_values = 0.0;
    double principal_directions = 0.0;
};

std::vector<GroupMetrics> evaluate_groups(const ModelParams& params, const TrainingData& data);

}  // namespace polygnn
