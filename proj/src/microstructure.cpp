#include "polygnn/microstructure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace polygnn {

std::vector<std::size_t> Polycrystal::grain_sizes() const {
    std::vector<std::size_t> sizes(n_grains(), 0);
    for (auto l : labels) {
        if (l >= sizes.size()) throw std::invalid_argument("polycrystal: label out of range");
        ++sizes[l];
    }
    return sizes;
}

std::vector<double> Polycrystal::volume_fractions() const {
    const auto sizes = grain_sizes();
    std::vector<double> v(sizes.size());
    const double total = static_cast<double>(labels.size());
    for (std::size_t g = 0; g < sizes.size(); ++g) v[g] = static_cast<double>(sizes[g]) / total;
    return v;
}

void validate(const Polycrystal& p) {
    if (p.grid.nx < 1 || p.grid.ny < 1 || p.grid.nz < 1) throw std::invalid_argument("polycrystal: bad grid");
    if (p.labels.size() != p.grid.voxel_count()) throw std::invalid_argument("polycrystal: label count != voxel count");
    if (p.n_grains() == 0) throw std::invalid_argument("polycrystal: no grains");
    const auto sizes = p.grain_sizes();
    for (std::size_t g = 0; g < sizes.size(); ++g) {
        if (sizes[g] == 0) throw std::invalid_argument("polycrystal: grain " + std::to_string(g) + " has no voxels");
    }
}

std::vector<std::uint16_t> periodic_voronoi_labels(const GridDims& grid, const std::vector<Vec3>& seeds) {
    if (seeds.empty()) throw std::invalid_argument("voronoi: no seeds");
    if (seeds.size() > 65535) throw std::invalid_argument("voronoi: too many seeds for 16-bit labels");
    std::vector<std::uint16_t> labels(grid.voxel_count());
    const double dims[3] = {double(grid.nx), double(grid.ny), double(grid.nz)};
    for (int i = 0; i < grid.nx; ++i) {
        for (int j = 0; j < grid.ny; ++j) {
            for (int k = 0; k < grid.nz; ++k) {
                const double c[3] = {(i + 0.5) / dims[0], (j + 0.5) / dims[1], (k + 0.5) / dims[2]};
                double best = std::numeric_limits<double>::infinity();
                std::size_t best_s = 0;
                for (std::size_t s = 0; s < seeds.size(); ++s) {
                    double d2 = 0.0;
                    for (int a = 0; a < 3; ++a) {
                        double d = std::abs(c[a] - seeds[s][a]);
                        d = std::min(d, 1.0 - d);
                        d2 += d * d;
                    }
                    if (d2 < best) {
                        best = d2;
                        best_s = s;
                    }
                }
                labels[grid.index(i, j, k)] = static_cast<std::uint16_t>(best_s);
            }
        }
    }
    return labels;
}

Polycrystal generate_polycrystal(std::uint64_t seed, int n_grains, const GridDims& grid) {
    if (n_grains < 1) throw std::invalid_argument("generate_polycrystal: n_grains must be >= 1");
    if (grid.nx < 2 || grid.ny < 2 || grid.nz < 2) throw std::invalid_argument("generate_polycrystal: grid dims must be >= 2");
    if (static_cast<std::size_t>(n_grains) > grid.voxel_count()) {
        throw std::invalid_argument("generate_polycrystal: more grains than voxels");
    }
    std::mt19937_64 rng(mix_seed(seed, 0x5eed));
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    constexpr int kMaxAttempts = 100;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        std::vector<Vec3> seeds(static_cast<std::size_t>(n_grains));
        for (auto& s : seeds) s = Vec3(unit(rng), unit(rng), unit(rng));
        auto raw = periodic_voronoi_labels(grid, seeds);

        std::vector<std::size_t> sizes(seeds.size(), 0);
        for (auto l : raw) ++sizes[l];
        if (std::any_of(sizes.begin(), sizes.end(), [](std::size_t s) { return s == 0; })) continue;

        // canonical order: largest grain first, ties by original index
        std::vector<std::size_t> order(seeds.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sizes[a] > sizes[b]; });
        std::vector<std::uint16_t> relabel(seeds.size());
        for (std::size_t r = 0; r < order.size(); ++r) relabel[order[r]] = static_cast<std::uint16_t>(r);

        Polycrystal p;
        p.grid = grid;
        p.seed = seed;
        p.labels.resize(raw.size());
        for (std::size_t v = 0; v < raw.size(); ++v) p.labels[v] = relabel[raw[v]];
        p.orientations.assign(seeds.size(), Orientation{});
        return p;
    }
    throw std::runtime_error("generate_polycrystal: could not place " + std::to_string(n_grains) +
                             " nonempty grains after " + std::to_string(kMaxAttempts) + " attempts");
}

std::vector<Orientation> sample_orientations(std::uint64_t seed, int n_grains, const OdfParams& odf) {
    if (!(odf.weight >= 0.0 && odf.weight <= 1.0)) throw std::invalid_argument("odf: weight must lie in [0,1]");
    if (!(odf.half_width > 0.0)) throw std::invalid_argument("odf: half_width must be positive");
    std::mt19937_64 rng(mix_seed(seed, 0x0df));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    // Angular spread |N(0, sigma)| has half maximum at half_width.
    const double sigma = odf.half_width / std::sqrt(2.0 * std::log(2.0));
    const Mat3 modal = bunge_rotation(odf.modal);

    std::vector<Orientation> out;
    out.reserve(static_cast<std::size_t>(std::max(n_grains, 0)));
    for (int g = 0; g < n_grains; ++g) {
        const bool uniform = unit(rng) < odf.weight;
        Mat3 R;
        if (uniform) {
            R = random_rotation(rng);
        } else {
            Vec3 axis;
            do {
                axis = Vec3(normal(rng), normal(rng), normal(rng));
            } while (axis.norm() < 1e-12);
            const double angle = std::min(std::abs(sigma * normal(rng)), std::numbers::pi);
            R = modal * axis_angle_rotation(axis, angle);
        }
        out.push_back(orientation_from_rotation(R));
    }
    return out;
}

std::vector<ContactPair> contacts(const Polycrystal& p) {
    const auto& g = p.grid;
    const std::size_t n = p.n_grains();
    std::vector<char> seen(n * n, 0);
    auto visit = [&](std::uint16_t a, std::uint16_t b) {
        if (a == b) return;
        const auto lo = std::min(a, b), hi = std::max(a, b);
        seen[std::size_t(lo) * n + hi] = 1;
    };
    // +x, +y, +z neighbour of every voxel covers each face exactly once
    for (int i = 0; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) {
            for (int k = 0; k < g.nz; ++k) {
                const auto here = p.labels[g.index(i, j, k)];
                visit(here, p.labels[g.index((i + 1) % g.nx, j, k)]);
                visit(here, p.labels[g.index(i, (j + 1) % g.ny, k)]);
                visit(here, p.labels[g.index(i, j, (k + 1) % g.nz)]);
            }
        }
    }
    std::vector<ContactPair> out;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            if (seen[a * n + b]) out.emplace_back(a, b);
        }
    }
    return out;
}

}  // namespace polygnn
