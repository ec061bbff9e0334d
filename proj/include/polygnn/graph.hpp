#pragma once

#include "polygnn/microstructure.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace polygnn {

/// Simple undirected graph; nodes are 0-based. Edges are stored once with
/// first < second, sorted lexicographically.
struct Graph {
    std::size_t n_nodes = 0;
    std::vector<std::pair<std::size_t, std::size_t>> edges;
};

struct DescriptorMatrices {
    Eigen::MatrixXd A;      // adjacency, zero diagonal
    Eigen::MatrixXd A_hat;  // A + I
    Eigen::MatrixXd D;      // degree of A
    Eigen::MatrixXd D_hat;  // degree of A_hat
    Eigen::MatrixXd L;      // D - A
    Eigen::MatrixXd L_sym;  // normalized Laplacian of A, zero rows for isolated nodes
};

enum class PropagationMode {
    paper_laplacian,         // I - D_hat^-1/2 A_hat D_hat^-1/2
    renormalized_adjacency,  // D_hat^-1/2 A_hat D_hat^-1/2
};

std::string to_string(PropagationMode mode);
PropagationMode parse_propagation_mode(const std::string& s);

/// Deduplicates and order-normalizes the contact list. Throws
/// std::invalid_argument for out-of-range indices or self-loops.
Graph build_graph(std::size_t n_nodes, std::span<const std::pair<std::size_t, std::size_t>> contacts);

DescriptorMatrices descriptor_matrices(const Graph& g);

Eigen::MatrixXd propagation_operator(const Graph& g, PropagationMode mode);

/// N x 4 node features: volume fraction, then phi1, Phi, phi2.
Eigen::MatrixXd feature_matrix(const Polycrystal& p);

}  // namespace polygnn
