#pragma once

#include "polygnn/tensor.hpp"

#include <array>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace polygnn {

struct GridDims {
    int nx = 16;
    int ny = 16;
    int nz = 16;

    std::size_t voxel_count() const {
        return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(nz);
    }
    /// Row-major linear index, x slowest.
    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * static_cast<std::size_t>(ny) + static_cast<std::size_t>(j)) *
                   static_cast<std::size_t>(nz) +
               static_cast<std::size_t>(k);
    }
    bool operator==(const GridDims&) const = default;
};

/// Periodic voxel polycrystal.
struct Polycrystal {
    GridDims grid;
    std::vector<std::uint16_t> labels;  // one grain index per voxel, row-major
    std::vector<Orientation> orientations;
    std::uint64_t seed = 0;

    std::size_t n_grains() const { return orientations.size(); }
    /// Voxel count per grain.
    std::vector<std::size_t> grain_sizes() const;
    /// Voxel-count fraction per grain.
    std::vector<double> volume_fractions() const;
};

struct OdfParams {
    double weight = 0.66;  // probability of a uniform draw
    Orientation modal{};
    double half_width = 0.17453292519943295;  // 10 degrees
};

using ContactPair = std::pair<std::size_t, std::size_t>;

/// Nearest-seed labelling of the grid under the periodic metric. Seed points
/// are fractional coordinates in [0,1)^3; ties go to the lower seed index.
std::vector<std::uint16_t> periodic_voronoi_labels(const GridDims& grid, const std::vector<Vec3>& seeds);

/// Random periodic Voronoi polycrystal. Grains are relabelled by descending
/// voxel count so that node order is canonical. Orientations are left at
/// identity; see sample_orientations.
Polycrystal generate_polycrystal(std::uint64_t seed, int n_grains, const GridDims& grid);

/// Texture sample mixing a uniform ODF with a unimodal peak around odf.modal.
std::vector<Orientation> sample_orientations(std::uint64_t seed, int n_grains, const OdfParams& odf);

/// Grain pairs sharing at least one voxel face (periodic 6-neighbourhood),
/// each pair reported once with first < second, sorted.
std::vector<ContactPair> contacts(const Polycrystal& p);

void validate(const Polycrystal& p);

}  // namespace polygnn
