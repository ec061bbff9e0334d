#pragma once

#include "polygnn/graph.hpp"
#include "polygnn/microstructure.hpp"
#include "polygnn/tensor.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace polygnn {

/// Affine layer z = x W + b with W stored (fan_in x fan_out).
struct DenseLayer {
    Eigen::MatrixXd W;
    Eigen::VectorXd b;

    Eigen::Index fan_in() const { return W.rows(); }
    Eigen::Index fan_out() const { return W.cols(); }
};

struct Architecture {
    bool use_graph = true;  // false: plain MLP on C only
    int n_features = 4;
    int max_nodes = 50;  // graphs are zero-padded to this many nodes before flattening
    std::vector<int> gcn_channels = {32, 64};
    std::vector<int> encoder_hidden = {64};
    int encoded_dim = 9;
    std::vector<int> mlp_hidden = {64, 64};
    PropagationMode propagation = PropagationMode::renormalized_adjacency;

    int mlp_input_dim() const { return (use_graph ? encoded_dim : 0) + 6; }
    bool operator==(const Architecture&) const = default;
};

void validate(const Architecture& arch);

/// Affine maps between physical and network units:
/// x_C = (C - c_shift) / c_scale and psi = psi_scale * y.
struct Normalization {
    Voigt c_shift = voigt_identity();
    Voigt c_scale = Voigt::Ones();
    double psi_scale = 1.0;
};

struct ModelParams {
    Architecture arch;
    std::vector<DenseLayer> gcn;      // node-feature transforms, ReLU
    std::vector<DenseLayer> encoder;  // after flatten; ReLU hidden, linear last
    std::vector<DenseLayer> mlp;      // ELU hidden layers
    DenseLayer output;                // linear scalar
    double dropout_rate = 0.0;
    double l2_coefficient = 0.0;
    Normalization norm;
};

/// Glorot-uniform weights, zero biases.
ModelParams init_params(const Architecture& arch, std::uint64_t seed);

/// Same shapes as arch, every entry zero.
ModelParams zero_params(const Architecture& arch);

std::size_t parameter_count(const ModelParams& p);

/// Layer arrays in a fixed order: gcn, encoder, mlp, output; W row-major, then b.
std::vector<double> flatten_parameters(const ModelParams& p);
void assign_parameters(ModelParams& p, std::span<const double> flat);

/// Number of leading entries of the flat vector that belong to the graph branch.
std::size_t graph_branch_parameter_count(const ModelParams& p);

/// Graph branch inputs, unpadded: propagation operator (N x N) and features (N x F).
struct GraphInput {
    Eigen::MatrixXd op;
    Eigen::MatrixXd X;
};

GraphInput make_graph_input(const Polycrystal& p, PropagationMode mode);

struct GcnTrace {
    std::vector<Eigen::MatrixXd> op_h;  // op * h^(l), input to layer l's transform
    std::vector<Eigen::MatrixXd> z;     // pre-activations, N rows
    std::vector<Eigen::MatrixXd> h;     // activations padded to max_nodes rows
    std::vector<Eigen::VectorXd> dense_in;   // encoder layer inputs after dropout
    std::vector<Eigen::VectorXd> dense_z;    // encoder pre-activations
    std::vector<Eigen::VectorXd> dropout_mask;
};

struct GcnOutput {
    Eigen::VectorXd encoded;
    GcnTrace trace;
};

/// Graph convolution encoder. With rng non-null the pass runs in training mode
/// and applies inverted dropout to every encoder dense input.
GcnOutput gcn_branch(const ModelParams& p, const GraphInput& g, std::mt19937_64* rng = nullptr);

/// Accumulates parameter gradients of encoded . encoded_adjoint into the
/// graph-branch slice of grad.
void gcn_backward(const ModelParams& p, const GraphInput& g, const GcnTrace& trace,
                  const Eigen::VectorXd& encoded_adjoint, std::span<double> grad);

/// Eval-mode encoding; empty for MLP-only architectures.
Eigen::VectorXd encode(const ModelParams& p, const GraphInput* g);

double energy_from_encoding(const ModelParams& p, const Eigen::VectorXd& encoded, const Voigt& C);

/// d psi / d C_voigt with raw-component differentiation (off-diagonals are
/// independent inputs).
Voigt energy_gradient_from_encoding(const ModelParams& p, const Eigen::VectorXd& encoded, const Voigt& C);

/// Maps d psi / d C_voigt to S = 2 dpsi/dC in Voigt form.
Voigt stress_from_energy_gradient(const Voigt& g);

double model_energy(const ModelParams& p, const GraphInput* g, const Voigt& C);
Voigt model_stress(const ModelParams& p, const GraphInput* g, const Voigt& C);

/// A model bound to one microstructure; the encoding is computed once.
class SurrogateModel {
public:
    SurrogateModel(const ModelParams& params, const GraphInput* graph);

    double energy(const Voigt& C) const;
    /// d psi / d C_voigt (raw components).
    Voigt energy_gradient(const Voigt& C) const;
    Voigt stress(const Voigt& C) const;
    const Eigen::VectorXd& encoding() const { return encoded_; }

private:
    const ModelParams* params_;
    Eigen::VectorXd encoded_;
};

enum class LossKind { L2, H1 };

std::string to_string(LossKind k);

/// A labelled point tied to one of the batch's graphs (ignored for MLP-only models).
struct LabeledPoint {
    std::size_t graph = 0;
    Voigt C = voigt_identity();
    double psi = 0.0;
    Voigt S = Voigt::Zero();
};

struct LossOptions {
    LossKind kind = LossKind::H1;
    double gradient_weight = 1.0;  // multiplies the stress term of the H1 loss
    std::mt19937_64* dropout_rng = nullptr;  // non-null: training mode
};

struct LossResult {
    double loss = 0.0;           // data + regularization
    double data_loss = 0.0;
    double energy_loss = 0.0;
    double gradient_loss = 0.0;
    std::vector<double> grad;    // flat, layout of flatten_parameters
};

/// Batch mean of the squared energy error (and, for H1, the squared error of
/// the six components of dpsi/dC), both divided by psi_scale^2, plus
/// l2_coefficient/2 |W|^2 over graph-branch weights.
LossResult loss_and_param_grads(const ModelParams& p, std::span<const GraphInput> graphs,
                                std::span<const LabeledPoint> batch, const LossOptions& opts);

}  // namespace polygnn
