#include "polygnn/energy_model.hpp"

namespace polygnn {

namespace {

Voigt raw_gradient_from_stress(const Mat3& S) {
    Voigt g = to_voigt(S);
    g.head<3>() *= 0.5;
    return g;
}

Mat3 strain_from_cauchy_green(const Voigt& C) { return 0.5 * (from_voigt(C) - Mat3::Identity()); }

}  // namespace

EnergyFunction surrogate_energy(const SurrogateModel& model) {
    const SurrogateModel* m = &model;
    return {[m](const Voigt& C) { return m->energy(C); }, [m](const Voigt& C) { return m->energy_gradient(C); }};
}

EnergyFunction fung_energy_function(const Orientation& o, const FungConstants& k) {
    validate(k);
    return {[o, k](const Voigt& C) { return fung_energy(strain_from_cauchy_green(C), o, k); },
            [o, k](const Voigt& C) { return raw_gradient_from_stress(fung_stress(strain_from_cauchy_green(C), o, k)); }};
}

EnergyFunction taylor_energy_function(const Polycrystal& p, const FungConstants& k) {
    validate(k);
    validate(p);
    const auto fractions = p.volume_fractions();
    const auto orientations = p.orientations;
    auto energy = [=](const Voigt& C) {
        const Mat3 E = strain_from_cauchy_green(C);
        double psi = 0.0;
        for (std::size_t g = 0; g < orientations.size(); ++g) psi += fractions[g] * fung_energy(E, orientations[g], k);
        return psi;
    };
    auto gradient = [=](const Voigt& C) {
        const Mat3 E = strain_from_cauchy_green(C);
        Mat3 S = Mat3::Zero();
        for (std::size_t g = 0; g < orientations.size(); ++g) S += fractions[g] * fung_stress(E, orientations[g], k);
        return raw_gradient_from_stress(S);
    };
    return {energy, gradient};
}

EnergyFunction quadratic_energy() {
    return {[](const Voigt& C) { return C.squaredNorm(); }, [](const Voigt& C) -> Voigt { return 2.0 * C; }};
}

}  // namespace polygnn
