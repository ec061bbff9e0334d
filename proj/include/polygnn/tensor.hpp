#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace polygnn {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

/// Symmetric second-order tensor in Voigt order [11, 22, 33, 12, 23, 13].
/// Off-diagonal slots hold the raw tensor components (no factor of 2).
using Voigt = Eigen::Matrix<double, 6, 1>;

inline constexpr int kVoigtRow[6] = {0, 1, 2, 0, 1, 0};
inline constexpr int kVoigtCol[6] = {0, 1, 2, 1, 2, 2};

/// Bunge (ZXZ) Euler triple in radians.
struct Orientation {
    double phi1 = 0.0;
    double Phi = 0.0;
    double phi2 = 0.0;
};

Voigt to_voigt(const Mat3& m);
Mat3 from_voigt(const Voigt& v);

/// Identity in Voigt form.
Voigt voigt_identity();

Mat3 right_cauchy_green(const Mat3& F);
Mat3 green_strain(const Mat3& F);

/// Double contraction A:B of two symmetric tensors stored in Voigt form.
double voigt_double_contraction(const Voigt& a, const Voigt& b);

/// Active rotation R = Rz(phi1) Rx(Phi) Rz(phi2); columns are the crystal axes
/// expressed in the sample frame.
Mat3 bunge_rotation(const Orientation& o);

/// Inverse of bunge_rotation, angles wrapped to [0,2pi) x [0,pi] x [0,2pi).
Orientation orientation_from_rotation(const Mat3& R);

Mat3 rotation_about_z(double angle);
Mat3 axis_angle_rotation(const Vec3& axis, double angle);

/// Uniformly distributed rotation (normalized Gaussian quaternion).
Mat3 random_rotation(std::mt19937_64& rng);

/// Misorientation angle between two rotations, in [0, pi].
double misorientation_angle(const Mat3& a, const Mat3& b);

/// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

}  // namespace polygnn
