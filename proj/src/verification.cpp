#include "polygnn/verification.hpp"

#include "polygnn/homogenization.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace polygnn {

CheckReport check_objectivity(const EnergyFunction& f, int n_pairs, std::uint64_t seed, double max_strain,
                              double threshold) {
    if (n_pairs < 1) throw std::invalid_argument("check_objectivity: n_pairs must be >= 1");
    std::mt19937_64 rng(mix_seed(seed, 0x0b1));
    CheckReport r{"objectivity", std::size_t(n_pairs), 0.0, 0.0, threshold, false};
    std::size_t ok = 0;
    for (int n = 0; n < n_pairs; ++n) {
        const Mat3 F = sample_deformation(rng, max_strain);
        const Mat3 Q = random_rotation(rng);
        const double dev = std::abs(f(cauchy_green_voigt(Q * F)) - f(cauchy_green_voigt(F)));
        r.max_deviation = std::max(r.max_deviation, dev);
        if (dev < threshold) ++ok;
    }
    r.fraction_satisfied = double(ok) / double(n_pairs);
    r.passed = ok == std::size_t(n_pairs);
    return r;
}

std::vector<Mat3> isotropy_rotations(int n_random, std::uint64_t seed) {
    std::vector<Mat3> out;
    for (double deg : {0.0, 30.0, 60.0}) out.push_back(rotation_about_z(deg * std::numbers::pi / 180.0));
    std::mt19937_64 rng(mix_seed(seed, 0x150));
    for (int n = 0; n < n_random; ++n) out.push_back(random_rotation(rng));
    return out;
}

CheckReport check_isotropy(const EnergyFunction& f, std::span<const Mat3> deformations, std::span<const Mat3> rotations,
                           double threshold) {
    CheckReport r{"anisotropy", deformations.size() * rotations.size(), 0.0, 0.0, threshold, false};
    std::size_t above = 0;
    for (const auto& F : deformations) {
        const double ref = f(cauchy_green_voigt(F));
        for (const auto& Q : rotations) {
            const double diff = std::abs(f(cauchy_green_voigt(F * Q)) - ref);
            const double dev = ref != 0.0 ? diff / std::abs(ref) : diff;
            r.max_deviation = std::max(r.max_deviation, dev);
            if (dev > threshold) ++above;
        }
    }
    r.fraction_satisfied = r.n_cases ? double(above) / double(r.n_cases) : 0.0;
    r.passed = r.max_deviation > threshold;
    return r;
}

std::vector<ConvexityPair> convexity_pairs(const EnergyFunction& f, const ConvexityOptions& opts) {
    if (opts.levels < 2) throw std::invalid_argument("convexity: need at least two grid levels");
    if (opts.n_pairs < 1) throw std::invalid_argument("convexity: n_pairs must be >= 1");
    std::mt19937_64 rng(mix_seed(opts.seed, 0xc0e));
    std::uniform_int_distribution<int> level(0, opts.levels - 1);
    auto grid_point = [&]() {
        Mat3 F = Mat3::Identity();
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) F(a, b) += opts.max_strain * level(rng) / double(opts.levels - 1);
        return cauchy_green_voigt(F);
    };
    std::vector<ConvexityPair> out;
    out.reserve(std::size_t(opts.n_pairs));
    for (int n = 0; n < opts.n_pairs; ++n) {
        const Voigt Ca = grid_point();
        const Voigt Cb = grid_point();
        const double rhs = f(Cb) + f.gradient(Cb).dot(Ca - Cb);
        out.push_back({rhs, f(Ca) - rhs});
    }
    return out;
}

CheckReport check_convexity(const EnergyFunction& f, const ConvexityOptions& opts, double required_fraction) {
    const auto pairs = convexity_pairs(f, opts);
    CheckReport r{"convexity", pairs.size(), 0.0, 0.0, opts.slack, false};
    std::size_t ok = 0;
    for (const auto& p : pairs) {
        if (p.margin >= -opts.slack) ++ok;
        r.max_deviation = std::max(r.max_deviation, -p.margin);
    }
    r.fraction_satisfied = double(ok) / double(pairs.size());
    r.passed = r.fraction_satisfied >= required_fraction;
    return r;
}

std::vector<Voigt> random_probes(int n, std::uint64_t seed, double max_strain) {
    std::mt19937_64 rng(mix_seed(seed, 0x9b0));
    std::vector<Voigt> out;
    for (int i = 0; i < n; ++i) out.push_back(cauchy_green_voigt(sample_deformation(rng, max_strain)));
    return out;
}

CheckReport gradient_check(const EnergyFunction& f, std::span<const Voigt> probes, double threshold, double step,
                           double floor) {
    CheckReport r{"gradient", probes.size(), 0.0, 0.0, threshold, false};
    std::size_t ok = 0;
    for (const auto& C : probes) {
        Voigt g_fd;
        for (int k = 0; k < 6; ++k) {
            Voigt up = C, down = C;
            up[k] += step;
            down[k] -= step;
            g_fd[k] = (f(up) - f(down)) / (2.0 * step);
        }
        const Voigt S_fd = stress_from_energy_gradient(g_fd);
        const double err = (f.stress(C) - S_fd).norm() / std::max(S_fd.norm(), floor);
        r.max_deviation = std::max(r.max_deviation, err);
        if (err < threshold) ++ok;
    }
    r.fraction_satisfied = probes.empty() ? 1.0 : double(ok) / double(probes.size());
    r.passed = ok == probes.size();
    return r;
}

int curvature_sign_changes(const EnergyFunction& f, const Mat3& E0, int n_steps, double tol) {
    if (n_steps < 3) throw std::invalid_argument("curvature_sign_changes: need at least 3 steps");
    std::vector<double> psi;
    for (int s = 0; s <= n_steps; ++s) {
        const double t = double(s) / n_steps;
        psi.push_back(f(to_voigt(Mat3::Identity() + 2.0 * t * E0)));
    }
    int changes = 0;
    int last_sign = 0;
    for (std::size_t s = 1; s + 1 < psi.size(); ++s) {
        const double d2 = psi[s + 1] - 2.0 * psi[s] + psi[s - 1];
        if (std::abs(d2) <= tol) continue;
        const int sign = d2 > 0 ? 1 : -1;
        if (last_sign != 0 && sign != last_sign) ++changes;
        last_sign = sign;
    }
    return changes;
}

std::vector<SurfacePoint> response_surface(const EnergyFunction& f, int i, int j, double lo, double hi, int n,
                                           const Mat3& Q) {
    if (i < 0 || i > 8 || j < 0 || j > 8 || i == j) throw std::invalid_argument("response_surface: bad component pair");
    if (n < 2) throw std::invalid_argument("response_surface: need n >= 2");
    std::vector<SurfacePoint> out;
    for (int ia = 0; ia < n; ++ia) {
        for (int ib = 0; ib < n; ++ib) {
            const double a = lo + (hi - lo) * ia / (n - 1);
            const double b = lo + (hi - lo) * ib / (n - 1);
            Mat3 U = Mat3::Identity();
            U(i / 3, i % 3) += a;
            U(j / 3, j % 3) += b;
            const Voigt C = cauchy_green_voigt(U * Q);
            out.push_back({a, b, f(C), f.stress(C)});
        }
    }
    return out;
}

}  // namespace polygnn
