#include "polygnn/fung.hpp"

#include <cmath>
#include <stdexcept>

namespace polygnn {

void validate(const FungConstants& k) {
    if (!(k.c > 0.0)) throw std::invalid_argument("fung: c must be positive");
    if ((k.lambda - k.lambda.transpose()).cwiseAbs().maxCoeff() > 0.0) {
        throw std::invalid_argument("fung: lambda must be symmetric");
    }
}

namespace {

void require_symmetric(const Mat3& E) {
    const double scale = std::max(1.0, E.cwiseAbs().maxCoeff());
    if ((E - E.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw std::invalid_argument("fung: strain tensor must be symmetric");
    }
}

// Strain in the crystal frame: Ec(a,b) = a_a . E a_b, so A_a:E = Ec(a,a) and
// A_a:E^2 = sum_j Ec(a,j)^2.
double exponent_crystal(const Mat3& Ec, const FungConstants& k) {
    double q = 0.0;
    for (int a = 0; a < 3; ++a) {
        q += 2.0 * k.mu[a] * Ec.row(a).squaredNorm();
        for (int b = 0; b < 3; ++b) q += k.lambda(a, b) * Ec(a, a) * Ec(b, b);
    }
    return q / k.c;
}

}  // namespace

std::array<Mat3, 3> structural_tensors(const Orientation& o) {
    const Mat3 R = bunge_rotation(o);
    std::array<Mat3, 3> A;
    for (int a = 0; a < 3; ++a) A[std::size_t(a)] = R.col(a) * R.col(a).transpose();
    return A;
}

double fung_exponent(const Mat3& E, const Orientation& o, const FungConstants& k) {
    require_symmetric(E);
    const Mat3 R = bunge_rotation(o);
    return exponent_crystal(R.transpose() * E * R, k);
}

double fung_energy(const Mat3& E, const Orientation& o, const FungConstants& k) {
    return 0.5 * k.c * std::expm1(fung_exponent(E, o, k));
}

Mat3 fung_stress(const Mat3& E, const Orientation& o, const FungConstants& k) {
    require_symmetric(E);
    const Mat3 R = bunge_rotation(o);
    const Mat3 Ec = R.transpose() * E * R;
    const double q = exponent_crystal(Ec, k);

    // dQ/dEc = c^-1 sum_a [2 mu_a (A_a Ec + Ec A_a) + 2 sum_b lambda_ab Ec_bb A_a]
    Mat3 dq = Mat3::Zero();
    for (int a = 0; a < 3; ++a) {
        Mat3 Aa = Mat3::Zero();
        Aa(a, a) = 1.0;
        double trace_term = 0.0;
        for (int b = 0; b < 3; ++b) trace_term += k.lambda(a, b) * Ec(b, b);
        dq += 2.0 * k.mu[a] * (Aa * Ec + Ec * Aa) + 2.0 * trace_term * Aa;
    }
    dq /= k.c;
    const Mat3 Sc = 0.5 * k.c * std::exp(q) * dq;
    return R * Sc * R.transpose();
}

MaterialResponse fung_response(const Mat3& F, const Orientation& o, const FungConstants& k) {
    const Mat3 E = green_strain(F);
    return {fung_energy(E, o, k), fung_stress(E, o, k)};
}

}  // namespace polygnn
