#include "polygnn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace polygnn {

Voigt to_voigt(const Mat3& m) {
    Voigt v;
    for (int k = 0; k < 6; ++k) v[k] = m(kVoigtRow[k], kVoigtCol[k]);
    return v;
}

Mat3 from_voigt(const Voigt& v) {
    Mat3 m;
    for (int k = 0; k < 6; ++k) {
        m(kVoigtRow[k], kVoigtCol[k]) = v[k];
        m(kVoigtCol[k], kVoigtRow[k]) = v[k];
    }
    return m;
}

Voigt voigt_identity() {
    Voigt v;
    v << 1, 1, 1, 0, 0, 0;
    return v;
}

Mat3 right_cauchy_green(const Mat3& F) { return F.transpose() * F; }

Mat3 green_strain(const Mat3& F) { return 0.5 * (right_cauchy_green(F) - Mat3::Identity()); }

double voigt_double_contraction(const Voigt& a, const Voigt& b) {
    return a.head<3>().dot(b.head<3>()) + 2.0 * a.tail<3>().dot(b.tail<3>());
}

Mat3 rotation_about_z(double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    Mat3 r;
    r << c, -s, 0, s, c, 0, 0, 0, 1;
    return r;
}

namespace {

Mat3 rotation_about_x(double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    Mat3 r;
    r << 1, 0, 0, 0, c, -s, 0, s, c;
    return r;
}

double wrap_two_pi(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    a = std::fmod(a, two_pi);
    if (a < 0.0) a += two_pi;
    // fmod of a value just below 0 can round back up to exactly 2pi
    if (a >= two_pi) a = 0.0;
    return a;
}

}  // namespace

Mat3 bunge_rotation(const Orientation& o) {
    return rotation_about_z(o.phi1) * rotation_about_x(o.Phi) * rotation_about_z(o.phi2);
}

Orientation orientation_from_rotation(const Mat3& R) {
    Orientation o;
    const double c = std::clamp(R(2, 2), -1.0, 1.0);
    o.Phi = std::acos(c);
    if (std::sin(o.Phi) > 1e-12) {
        o.phi1 = std::atan2(R(0, 2), -R(1, 2));
        o.phi2 = std::atan2(R(2, 0), R(2, 1));
    } else {
        // gimbal lock: only phi1 +/- phi2 is defined, put it all on phi1
        o.phi1 = std::atan2(R(1, 0), R(0, 0));
        o.phi2 = 0.0;
    }
    o.phi1 = wrap_two_pi(o.phi1);
    o.phi2 = wrap_two_pi(o.phi2);
    return o;
}

Mat3 axis_angle_rotation(const Vec3& axis, double angle) {
    return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

Mat3 random_rotation(std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::Vector4d q;
    do {
        for (int i = 0; i < 4; ++i) q[i] = normal(rng);
    } while (q.norm() < 1e-12);
    q.normalize();
    return Eigen::Quaterniond(q[0], q[1], q[2], q[3]).toRotationMatrix();
}

double misorientation_angle(const Mat3& a, const Mat3& b) {
    const double c = 0.5 * ((a.transpose() * b).trace() - 1.0);
    return std::acos(std::clamp(c, -1.0, 1.0));
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    auto splitmix = [](std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    };
    return splitmix(splitmix(splitmix(a) ^ b) ^ c);
}

}  // namespace polygnn
