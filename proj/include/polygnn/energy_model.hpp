#pragma once

#include "polygnn/fung.hpp"
#include "polygnn/microstructure.hpp"
#include "polygnn/network.hpp"
#include "polygnn/tensor.hpp"

#include <functional>

namespace polygnn {

/// A scalar energy of the right Cauchy-Green tensor with its gradient taken
/// with respect to the raw Voigt components (off-diagonals independent).
struct EnergyFunction {
    std::function<double(const Voigt&)> energy;
    std::function<Voigt(const Voigt&)> gradient;

    double operator()(const Voigt& C) const { return energy(C); }
    /// S = 2 dpsi/dC in Voigt form.
    Voigt stress(const Voigt& C) const { return stress_from_energy_gradient(gradient(C)); }
};

/// The model must outlive the returned function.
EnergyFunction surrogate_energy(const SurrogateModel& model);

/// Single-crystal Fung energy as a function of C.
EnergyFunction fung_energy_function(const Orientation& o, const FungConstants& k = {});

/// Volume-weighted grain average at uniform deformation.
EnergyFunction taylor_energy_function(const Polycrystal& p, const FungConstants& k = {});

/// psi = |c|^2 over the six Voigt entries.
EnergyFunction quadratic_energy();

inline Voigt cauchy_green_voigt(const Mat3& F) { return to_voigt(right_cauchy_green(F)); }

}  // namespace polygnn
