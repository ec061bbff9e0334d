#include "polygnn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace polygnn {

std::string to_string(PropagationMode mode) {
    switch (mode) {
        case PropagationMode::paper_laplacian:
            return "paper_laplacian";
        case PropagationMode::renormalized_adjacency:
            return "renormalized_adjacency";
    }
    return "unknown";
}

PropagationMode parse_propagation_mode(const std::string& s) {
    if (s == "paper_laplacian") return PropagationMode::paper_laplacian;
    if (s == "renormalized_adjacency") return PropagationMode::renormalized_adjacency;
    throw std::invalid_argument("unknown propagation mode: " + s);
}

Graph build_graph(std::size_t n_nodes, std::span<const std::pair<std::size_t, std::size_t>> contacts) {
    if (n_nodes == 0) throw std::invalid_argument("build_graph: graph needs at least one node");
    Graph g;
    g.n_nodes = n_nodes;
    g.edges.reserve(contacts.size());
    for (auto [i, j] : contacts) {
        if (i >= n_nodes || j >= n_nodes) throw std::invalid_argument("build_graph: node index out of range");
        if (i == j) throw std::invalid_argument("build_graph: self-loop rejected");
        g.edges.emplace_back(std::min(i, j), std::max(i, j));
    }
    std::sort(g.edges.begin(), g.edges.end());
    g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
    return g;
}

namespace {

Eigen::MatrixXd adjacency(const Graph& g) {
    const auto n = static_cast<Eigen::Index>(g.n_nodes);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    for (auto [i, j] : g.edges) {
        A(Eigen::Index(i), Eigen::Index(j)) = 1.0;
        A(Eigen::Index(j), Eigen::Index(i)) = 1.0;
    }
    return A;
}

// D^-1/2 M D^-1/2 with zero rows/cols where the degree vanishes.
Eigen::MatrixXd symmetric_scale(const Eigen::MatrixXd& M, const Eigen::VectorXd& degree) {
    Eigen::VectorXd s(degree.size());
    for (Eigen::Index i = 0; i < degree.size(); ++i) s[i] = degree[i] > 0.0 ? 1.0 / std::sqrt(degree[i]) : 0.0;
    return s.asDiagonal() * M * s.asDiagonal();
}

}  // namespace

DescriptorMatrices descriptor_matrices(const Graph& g) {
    DescriptorMatrices m;
    const auto n = static_cast<Eigen::Index>(g.n_nodes);
    m.A = adjacency(g);
    m.A_hat = m.A + Eigen::MatrixXd::Identity(n, n);
    const Eigen::VectorXd deg = m.A.rowwise().sum();
    const Eigen::VectorXd deg_hat = m.A_hat.rowwise().sum();
    m.D = deg.asDiagonal();
    m.D_hat = deg_hat.asDiagonal();
    m.L = m.D - m.A;
    m.L_sym = symmetric_scale(m.L, deg);
    return m;
}

Eigen::MatrixXd propagation_operator(const Graph& g, PropagationMode mode) {
    const auto n = static_cast<Eigen::Index>(g.n_nodes);
    const Eigen::MatrixXd A_hat = adjacency(g) + Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd renorm = symmetric_scale(A_hat, A_hat.rowwise().sum());
    if (mode == PropagationMode::renormalized_adjacency) return renorm;
    return Eigen::MatrixXd::Identity(n, n) - renorm;
}

Eigen::MatrixXd feature_matrix(const Polycrystal& p) {
    validate(p);
    const auto v = p.volume_fractions();
    const auto n = static_cast<Eigen::Index>(p.n_grains());
    Eigen::MatrixXd X(n, 4);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& o = p.orientations[std::size_t(i)];
        X(i, 0) = v[std::size_t(i)];
        X(i, 1) = o.phi1;
        X(i, 2) = o.Phi;
        X(i, 3) = o.phi2;
    }
    return X;
}

}  // namespace polygnn
