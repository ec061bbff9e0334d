#pragma once

#include "polygnn/energy_model.hpp"

#include <vector>

namespace polygnn {

struct PhaseFieldParams {
    double g_c = 1e-3;    // critical energy release rate
    double l_0 = 1.2e-3;  // length scale (m)
    double eta = 1e-6;    // viscosity
    double r = 0.0;       // residual stiffness factor
    double dt = 5e-8;     // time step (s)
};

void validate(const PhaseFieldParams& p);

struct DamageState {
    double d = 0.0;
    double H = 0.0;
};

struct DeformationSplit {
    Mat3 F_vol;
    Mat3 F_iso;
};

/// F = F_iso F_vol with F_vol = J^(1/3) I.
DeformationSplit split_deformation(const Mat3& F);

struct EnergySplit {
    double psi_plus = 0.0;
    double psi_minus = 0.0;
};

/// Tension/compression split: everything is tensile for J >= 1, otherwise the
/// volumetric energy psi(F_vol) is compressive.
EnergySplit energy_split(const EnergyFunction& f, const Mat3& F);

inline double degradation(double d) { return (1.0 - d) * (1.0 - d); }

/// P = 2 F [(g(d) + r) dpsi+/dC + dpsi-/dC].
Mat3 degraded_stress(const EnergyFunction& f, const Mat3& F, double d, const PhaseFieldParams& params);

/// Backward-Euler step of the local damage balance driven by the history
/// variable; damage never decreases.
DamageState evolve_damage(const DamageState& state, double psi_plus, double dt, const PhaseFieldParams& params);

/// Limit of the damage under a constant history H.
double steady_state_damage(double H, const PhaseFieldParams& params);

struct RampRecord {
    double t = 0.0;
    double psi_plus = 0.0;
    double H = 0.0;
    double d = 0.0;
    Mat3 P = Mat3::Zero();
};

/// Material point driven along F(t) = [I + (s / n_steps)(F_end - I)] Q, s = 0..n_steps,
/// followed by hold_steps at the final state.
std::vector<RampRecord> run_ramp(const EnergyFunction& f, const Mat3& F_end, int n_steps, int hold_steps,
                                 const PhaseFieldParams& params, const Mat3& Q = Mat3::Identity());

}  // namespace polygnn
