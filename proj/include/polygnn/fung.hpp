#pragma once

#include "polygnn/tensor.hpp"

#include <array>

namespace polygnn {

/// Orthotropic Fung constants (MPa). Defaults are the reference values used
/// throughout the database generation.
struct FungConstants {
    double c = 2.0;
    Mat3 lambda = (Mat3() << 0.6, 0.7, 0.6, 0.7, 1.4, 0.7, 0.6, 0.7, 0.5).finished();
    Vec3 mu = Vec3(0.1, 0.7, 0.5);
};

void validate(const FungConstants& k);

/// A_a = a_a (x) a_a with a_a = R(o) e_a.
std::array<Mat3, 3> structural_tensors(const Orientation& o);

/// Exponent Q of the Fung energy for Green strain E.
double fung_exponent(const Mat3& E, const Orientation& o, const FungConstants& k);

/// W = c/2 (exp(Q) - 1). Throws std::invalid_argument if E is not symmetric.
double fung_energy(const Mat3& E, const Orientation& o, const FungConstants& k = {});

/// Second Piola-Kirchhoff stress S = dW/dE = 2 dW/dC.
Mat3 fung_stress(const Mat3& E, const Orientation& o, const FungConstants& k = {});

struct MaterialResponse {
    double psi = 0.0;
    Mat3 S = Mat3::Zero();
};

/// Energy and PK2 stress for a deformation gradient.
MaterialResponse fung_response(const Mat3& F, const Orientation& o, const FungConstants& k = {});

}  // namespace polygnn
