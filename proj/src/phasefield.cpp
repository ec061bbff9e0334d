#include "polygnn/phasefield.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace polygnn {

void validate(const PhaseFieldParams& p) {
    if (!(p.g_c > 0.0 && p.l_0 > 0.0 && p.eta > 0.0 && p.dt > 0.0))
        throw std::invalid_argument("phase field: g_c, l_0, eta and dt must be positive");
    if (!(p.r >= 0.0)) throw std::invalid_argument("phase field: r must be >= 0");
}

DeformationSplit split_deformation(const Mat3& F) {
    const double J = F.determinant();
    if (!(J > 0.0)) throw std::invalid_argument("split_deformation: det F must be positive");
    const double s = std::cbrt(J);
    return {s * Mat3::Identity(), F / s};
}

EnergySplit energy_split(const EnergyFunction& f, const Mat3& F) {
    const auto split = split_deformation(F);
    const double psi = f(cauchy_green_voigt(F));
    if (F.determinant() >= 1.0) return {psi, 0.0};
    const double psi_vol = f(cauchy_green_voigt(split.F_vol));
    return {psi - psi_vol, psi_vol};
}

Mat3 degraded_stress(const EnergyFunction& f, const Mat3& F, double d, const PhaseFieldParams& params) {
    if (!(d >= 0.0 && d <= 1.0)) throw std::invalid_argument("degraded_stress: d must lie in [0,1]");
    const auto split = split_deformation(F);
    // dpsi/dC = S / 2
    const Mat3 G = 0.5 * from_voigt(f.stress(cauchy_green_voigt(F)));
    Mat3 G_plus = G, G_minus = Mat3::Zero();
    if (F.determinant() < 1.0) {
        G_minus = 0.5 * from_voigt(f.stress(cauchy_green_voigt(split.F_vol)));
        G_plus = G - G_minus;
    }
    return 2.0 * F * ((degradation(d) + params.r) * G_plus + G_minus);
}

DamageState evolve_damage(const DamageState& state, double psi_plus, double dt, const PhaseFieldParams& params) {
    if (!(dt > 0.0)) throw std::invalid_argument("evolve_damage: dt must be positive");
    DamageState next;
    next.H = std::max(state.H, psi_plus);
    const double d = (params.eta * state.d + 2.0 * dt * next.H) /
                     (params.eta + dt * (params.g_c / params.l_0 + 2.0 * next.H));
    next.d = std::clamp(std::max(state.d, d), 0.0, 1.0);
    return next;
}

double steady_state_damage(double H, const PhaseFieldParams& params) {
    return 2.0 * H / (params.g_c / params.l_0 + 2.0 * H);
}

std::vector<RampRecord> run_ramp(const EnergyFunction& f, const Mat3& F_end, int n_steps, int hold_steps,
                                 const PhaseFieldParams& params, const Mat3& Q) {
    validate(params);
    if (n_steps < 1 || hold_steps < 0) throw std::invalid_argument("run_ramp: bad step counts");
    std::vector<RampRecord> out;
    DamageState state;
    for (int s = 0; s <= n_steps + hold_steps; ++s) {
        const double frac = std::min(1.0, double(s) / n_steps);
        const Mat3 F = (Mat3::Identity() + frac * (F_end - Mat3::Identity())) * Q;
        const auto split = energy_split(f, F);
        if (s > 0) state = evolve_damage(state, split.psi_plus, params.dt, params);
        out.push_back({s * params.dt, split.psi_plus, state.H, state.d, degraded_stress(f, F, state.d, params)});
    }
    return out;
}

}  // namespace polygnn
