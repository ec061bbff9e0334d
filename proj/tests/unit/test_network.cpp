#include "polygnn/network.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace polygnn;

namespace {

Architecture small_arch(bool graph) {
    Architecture a;
    a.use_graph = graph;
    a.max_nodes = 6;
    a.gcn_channels = {5, 4};
    a.encoder_hidden = {7};
    a.encoded_dim = 3;
    a.mlp_hidden = {6, 5};
    return a;
}

GraphInput five_node_input(std::uint64_t seed) {
    const std::vector<std::pair<std::size_t, std::size_t>> c = {{0, 1}, {1, 2}, {2, 3}, {2, 4}, {3, 4}};
    GraphInput g;
    g.op = propagation_operator(build_graph(5, c), PropagationMode::renormalized_adjacency);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    g.X.resize(5, 4);
    for (auto& v : g.X.reshaped()) v = u(rng);
    return g;
}

Voigt random_c(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 0.1);
    Mat3 F = Mat3::Identity();
    for (int i = 0; i < 9; ++i) F(i / 3, i % 3) += u(rng);
    return to_voigt(right_cauchy_green(F));
}

// randomizes biases too so that no unit sits exactly at a kink
ModelParams random_params(const Architecture& a, std::uint64_t seed) {
    ModelParams p = init_params(a, seed);
    auto flat = flatten_parameters(p);
    std::mt19937_64 rng(mix_seed(seed, 1));
    std::normal_distribution<double> n(0.0, 0.3);
    for (auto& v : flat) v += n(rng);
    assign_parameters(p, flat);
    return p;
}

}  // namespace

TEST(Parameters, FlattenAssignRoundTrip) {
    ModelParams p = init_params(small_arch(true), 3);
    const auto flat = flatten_parameters(p);
    EXPECT_EQ(flat.size(), parameter_count(p));
    ModelParams q = zero_params(small_arch(true));
    assign_parameters(q, flat);
    EXPECT_EQ(flatten_parameters(q), flat);
    EXPECT_LT(graph_branch_parameter_count(p), flat.size());
    EXPECT_EQ(graph_branch_parameter_count(init_params(small_arch(false), 3)), 0u);
    EXPECT_THROW(assign_parameters(q, std::span(flat).first(3)), std::invalid_argument);
}

TEST(Parameters, InitializationIsSeeded) {
    EXPECT_EQ(flatten_parameters(init_params(small_arch(true), 5)), flatten_parameters(init_params(small_arch(true), 5)));
    EXPECT_NE(flatten_parameters(init_params(small_arch(true), 5)), flatten_parameters(init_params(small_arch(true), 6)));
}

TEST(Gcn, ZeroFeaturesLeaveOnlyTheBiases) {
    const ModelParams p = random_params(small_arch(true), 1);
    GraphInput a = five_node_input(1), b = five_node_input(2);
    a.X.setZero();
    b.X.setZero();
    b.op = Eigen::MatrixXd::Identity(5, 5);
    const auto ta = gcn_branch(p, a).trace, tb = gcn_branch(p, b).trace;
    for (Eigen::Index i = 0; i < 5; ++i) {
        EXPECT_EQ(Eigen::VectorXd(ta.z[0].row(i).transpose()), p.gcn[0].b);
        EXPECT_EQ(Eigen::VectorXd(tb.z[0].row(i).transpose()), p.gcn[0].b);
    }
}

TEST(Gcn, SingleNodeLayerIsADenseLayer) {
    const ModelParams p = random_params(small_arch(true), 2);
    GraphInput g;
    g.op = Eigen::MatrixXd::Ones(1, 1);
    g.X = Eigen::MatrixXd(1, 4);
    g.X << 1.0, 0.2, 0.7, 1.9;
    const auto out = gcn_branch(p, g);
    const Eigen::RowVectorXd z = g.X * p.gcn[0].W + p.gcn[0].b.transpose();
    EXPECT_LT((out.trace.z[0] - z).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Gcn, RelabelingPermutesLayerOutputs) {
    const ModelParams p = random_params(small_arch(true), 3);
    const GraphInput g = five_node_input(3);
    std::vector<int> pi = {3, 0, 4, 1, 2};
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(5, 5);
    for (int i = 0; i < 5; ++i) P(pi[std::size_t(i)], i) = 1.0;
    GraphInput h{P * g.op * P.transpose(), P * g.X};
    const auto a = gcn_branch(p, g), b = gcn_branch(p, h);
    for (std::size_t l = 0; l < a.trace.z.size(); ++l)
        EXPECT_LT((b.trace.z[l] - P * a.trace.z[l]).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Gcn, OversizedGraphIsRejected) {
    Architecture a = small_arch(true);
    a.max_nodes = 4;
    const ModelParams p = init_params(a, 0);
    const GraphInput g = five_node_input(0);
    EXPECT_THROW(encode(p, &g), std::invalid_argument);
}

TEST(Surrogate, ZeroNetworkIsIdenticallyZero) {
    const ModelParams p = zero_params(small_arch(true));
    const GraphInput g = five_node_input(4);
    std::mt19937_64 rng(4);
    for (int rep = 0; rep < 10; ++rep) {
        const Voigt C = random_c(rng);
        EXPECT_EQ(model_energy(p, &g, C), 0.0);
        EXPECT_EQ(model_stress(p, &g, C), Voigt::Zero());
    }
}

TEST(Surrogate, EvaluationIsDeterministic) {
    const ModelParams p = random_params(small_arch(true), 6);
    const GraphInput g = five_node_input(6);
    std::mt19937_64 rng(6);
    const Voigt C = random_c(rng);
    const SurrogateModel a(p, &g), b(p, &g);
    EXPECT_EQ(a.energy(C), b.energy(C));
    EXPECT_EQ(a.stress(C), b.stress(C));
    EXPECT_EQ(a.energy(C), model_energy(p, &g, C));
}

TEST(Surrogate, DifferentGraphsGiveDifferentEnergies) {
    const ModelParams p = random_params(small_arch(true), 7);
    const GraphInput a = five_node_input(7), b = five_node_input(8);
    const Voigt C = to_voigt(right_cauchy_green(Mat3::Identity() * 1.05));
    EXPECT_NE(model_energy(p, &a, C), model_energy(p, &b, C));
}

TEST(Surrogate, StressMatchesFiniteDifferencesOfTheEnergy) {
    std::mt19937_64 rng(8);
    for (int rep = 0; rep < 30; ++rep) {
        const bool graph = rep % 2 == 0;
        ModelParams p = random_params(small_arch(graph), std::uint64_t(rep));
        p.norm.c_scale = Voigt::Constant(0.2);
        p.norm.psi_scale = 0.01;
        const GraphInput g = five_node_input(std::uint64_t(rep));
        const SurrogateModel m(p, graph ? &g : nullptr);
        const Voigt C = random_c(rng);
        Voigt grad_fd;
        const double h = 1e-5;
        for (int k = 0; k < 6; ++k) {
            Voigt e = Voigt::Zero();
            e[k] = h;
            grad_fd[k] = (m.energy(C + e) - m.energy(C - e)) / (2 * h);
        }
        const Voigt s_fd = stress_from_energy_gradient(grad_fd);
        EXPECT_LT((m.stress(C) - s_fd).norm() / s_fd.norm(), 1e-5);
    }
}

TEST(Surrogate, EluIsContinuouslyDifferentiableAtZero) {
    Architecture a = small_arch(false);
    a.mlp_hidden = {1};
    ModelParams p = zero_params(a);
    const Voigt C0 = to_voigt(right_cauchy_green(Mat3::Identity() * 1.03));
    for (int k = 0; k < 6; ++k) p.mlp[0].W(k, 0) = 0.5 + 0.1 * k;
    p.mlp[0].b[0] = -(C0 - p.norm.c_shift).dot(p.mlp[0].W.col(0));
    p.output.W(0, 0) = 1.0;
    const Voigt dir = Voigt::Ones();
    const double t = 1e-7, psi0 = model_energy(p, nullptr, C0);
    const double right = (model_energy(p, nullptr, C0 + t * dir) - psi0) / t;
    const double left = (psi0 - model_energy(p, nullptr, C0 - t * dir)) / t;
    EXPECT_NEAR(left, right, 1e-5);
    const SurrogateModel m(p, nullptr);
    EXPECT_NEAR(m.energy_gradient(C0).dot(dir), right, 1e-5);
}

TEST(Loss, ExactLabelsLeaveOnlyTheRegularizer) {
    ModelParams p = random_params(small_arch(true), 9);
    p.l2_coefficient = 1e-3;
    const std::vector<GraphInput> graphs = {five_node_input(9)};
    std::mt19937_64 rng(9);
    std::vector<LabeledPoint> batch;
    for (int i = 0; i < 4; ++i) {
        const Voigt C = random_c(rng);
        batch.push_back({0, C, model_energy(p, &graphs[0], C), model_stress(p, &graphs[0], C)});
    }
    const auto r = loss_and_param_grads(p, graphs, batch, {});
    EXPECT_LT(r.data_loss, 1e-26);

    ModelParams weights_only = p;
    for (auto& l : weights_only.gcn) l.b.setZero();
    for (auto& l : weights_only.encoder) l.b.setZero();
    const auto flat = flatten_parameters(weights_only);
    const std::size_t gb = graph_branch_parameter_count(p);
    for (std::size_t i = 0; i < r.grad.size(); ++i) {
        const double expected = i < gb ? p.l2_coefficient * flat[i] : 0.0;
        EXPECT_NEAR(r.grad[i], expected, 1e-12) << i;
    }
}

TEST(Loss, L2EqualsH1WithoutTheGradientTerm) {
    const ModelParams p = random_params(small_arch(true), 10);
    const std::vector<GraphInput> graphs = {five_node_input(10), five_node_input(11)};
    std::mt19937_64 rng(10);
    std::vector<LabeledPoint> h1_batch, l2_batch;
    for (int i = 0; i < 6; ++i) {
        const Voigt C = random_c(rng);
        const Voigt S = Voigt::Constant(0.01 * i);
        h1_batch.push_back({std::size_t(i % 2), C, 0.002 * i, S});
        l2_batch.push_back({std::size_t(i % 2), C, 0.002 * i, Voigt::Zero()});
    }
    const auto a = loss_and_param_grads(p, graphs, l2_batch, {LossKind::L2, 1.0, nullptr});
    const auto b = loss_and_param_grads(p, graphs, h1_batch, {LossKind::H1, 0.0, nullptr});
    EXPECT_DOUBLE_EQ(a.loss, b.loss);
    EXPECT_EQ(a.grad, b.grad);
    const auto c = loss_and_param_grads(p, graphs, h1_batch, {LossKind::H1, 1.0, nullptr});
    EXPECT_GT(c.gradient_loss, 0.0);
    EXPECT_DOUBLE_EQ(c.energy_loss, a.energy_loss);
}

TEST(Loss, ParameterGradientsMatchFiniteDifferences) {
    Architecture a;
    a.max_nodes = 5;
    a.gcn_channels = {1};
    a.encoder_hidden = {1};
    a.encoded_dim = 1;
    a.mlp_hidden = {1};
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        ModelParams p = random_params(a, seed);
        p.l2_coefficient = 1e-3;
        p.norm.psi_scale = 0.02;
        const std::vector<GraphInput> graphs = {five_node_input(seed)};
        std::mt19937_64 rng(seed);
        const Voigt C = random_c(rng);
        const std::vector<LabeledPoint> batch = {{0, C, 0.004, (Voigt() << 0.1, 0.08, 0.05, 0.02, 0.01, 0.03).finished()}};
        const auto r = loss_and_param_grads(p, graphs, batch, {});
        auto theta = flatten_parameters(p);
        std::vector<double> fd(theta.size());
        const double h = 1e-6;
        for (std::size_t i = 0; i < theta.size(); ++i) {
            ModelParams q = p;
            auto t = theta;
            t[i] += h;
            assign_parameters(q, t);
            const double up = loss_and_param_grads(q, graphs, batch, {}).loss;
            t[i] -= 2 * h;
            assign_parameters(q, t);
            const double down = loss_and_param_grads(q, graphs, batch, {}).loss;
            fd[i] = (up - down) / (2 * h);
        }
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < fd.size(); ++i) {
            num += (r.grad[i] - fd[i]) * (r.grad[i] - fd[i]);
            den += fd[i] * fd[i];
        }
        ASSERT_GT(den, 1e-12);
        EXPECT_LT(std::sqrt(num / den), 1e-4);
    }
}

TEST(Loss, DropoutOnlyActsInTrainingMode) {
    ModelParams p = random_params(small_arch(true), 12);
    p.dropout_rate = 0.5;
    const std::vector<GraphInput> graphs = {five_node_input(12)};
    const std::vector<LabeledPoint> batch = {{0, voigt_identity() * 1.05, 0.01, Voigt::Zero()}};
    const auto e1 = loss_and_param_grads(p, graphs, batch, {});
    const auto e2 = loss_and_param_grads(p, graphs, batch, {});
    EXPECT_EQ(e1.loss, e2.loss);
    std::mt19937_64 rng(1);
    bool differs = false;
    for (int rep = 0; rep < 10 && !differs; ++rep)
        differs = loss_and_param_grads(p, graphs, batch, {LossKind::H1, 1.0, &rng}).loss != e1.loss;
    EXPECT_TRUE(differs);
}

TEST(Architecture, ValidationRejectsEmptyWidths) {
    Architecture a = small_arch(true);
    EXPECT_NO_THROW(validate(a));
    a.gcn_channels = {0};
    EXPECT_THROW(validate(a), std::invalid_argument);
}
