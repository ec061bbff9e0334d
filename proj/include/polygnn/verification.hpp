#pragma once

#include "polygnn/energy_model.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace polygnn {

struct CheckReport {
    std::string name;
    std::size_t n_cases = 0;
    double max_deviation = 0.0;
    double fraction_satisfied = 1.0;
    double threshold = 0.0;
    bool passed = false;
};

/// Compares psi(C(QF)) with psi(C(F)) for random F and uniformly random Q.
CheckReport check_objectivity(const EnergyFunction& f, int n_pairs, std::uint64_t seed, double max_strain = 0.1,
                              double threshold = 1e-10);

/// z rotations by 0, 30 and 60 degrees followed by n_random uniform rotations.
std::vector<Mat3> isotropy_rotations(int n_random, std::uint64_t seed);

/// Maximum relative change of psi(C(F Q)) against psi(C(F)) over all F and Q
/// (absolute change where psi(C(F)) = 0). Passes when the response is
/// anisotropic, i.e. the deviation exceeds the threshold.
CheckReport check_isotropy(const EnergyFunction& f, std::span<const Mat3> deformations, std::span<const Mat3> rotations,
                           double threshold = 1e-2);

struct ConvexityOptions {
    int levels = 3;  // grid values per component of F - I across [0, max_strain]
    double max_strain = 0.1;
    int n_pairs = 10000;
    double slack = 1e-10;
    std::uint64_t seed = 0;
};

/// One tested pair: rhs = psi(C_b) + dpsi/dC(C_b) : (C_a - C_b), margin = psi(C_a) - rhs.
struct ConvexityPair {
    double rhs = 0.0;
    double margin = 0.0;
};

std::vector<ConvexityPair> convexity_pairs(const EnergyFunction& f, const ConvexityOptions& opts);

/// Gradient inequality over random grid pairs; max_deviation is the largest
/// violation -margin (0 when no margin is negative).
CheckReport check_convexity(const EnergyFunction& f, const ConvexityOptions& opts, double required_fraction = 1.0);

/// Random Cauchy-Green probes in the sampled deformation range.
std::vector<Voigt> random_probes(int n, std::uint64_t seed, double max_strain = 0.1);

/// Stress from the gradient path against central differences of the energy;
/// error per probe is |S - S_fd| / max(|S_fd|, floor).
CheckReport gradient_check(const EnergyFunction& f, std::span<const Voigt> probes, double threshold = 1e-5,
                           double step = 1e-6, double floor = 1e-8);

/// Number of sign flips of the second differences of psi along
/// C(t) = I + 2 t E0, t in [0, 1], ignoring differences with |.| <= tol.
int curvature_sign_changes(const EnergyFunction& f, const Mat3& E0, int n_steps, double tol = 1e-6);

struct SurfacePoint {
    double a = 0.0;
    double b = 0.0;
    double psi = 0.0;
    Voigt S = Voigt::Zero();
};

/// Response on F = (I + a e_i + b e_j) Q with (i, j) indices into F in
/// row-major order and a, b on a uniform n x n grid over [lo, hi].
std::vector<SurfacePoint> response_surface(const EnergyFunction& f, int i, int j, double lo, double hi, int n,
                                           const Mat3& Q = Mat3::Identity());

}  // namespace polygnn
