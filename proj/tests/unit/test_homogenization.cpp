#include "polygnn/homogenization.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace polygnn;

namespace {

Polycrystal with_orientations(Polycrystal p, std::uint64_t seed) {
    p.orientations = sample_orientations(seed, int(p.n_grains()), {});
    return p;
}

Mat3 mild_deformation() {
    Mat3 F = Mat3::Identity();
    F(0, 0) += 0.06;
    F(1, 1) += 0.02;
    F(0, 1) += 0.03;
    F(2, 0) += 0.01;
    return F;
}

}  // namespace

TEST(SampleDeformation, ComponentsStayInRangeAndAreSeeded) {
    std::mt19937_64 rng(1);
    for (int rep = 0; rep < 200; ++rep) {
        const Mat3 U = sample_deformation(rng) - Mat3::Identity();
        EXPECT_GE(U.minCoeff(), 0.0);
        EXPECT_LE(U.maxCoeff(), 0.1);
    }
    EXPECT_EQ(sample_deformation(std::uint64_t(4)), sample_deformation(std::uint64_t(4)));
    EXPECT_EQ(sample_deformation(std::uint64_t(4), 0.0), Mat3::Identity());
}

TEST(SampleDeformation, UpperCornerStaysInvertible) {
    const Mat3 F = Mat3::Identity() + Mat3::Constant(0.1);
    EXPECT_GT(F.determinant(), 0.0);
}

TEST(Taylor, SingleGrainEqualsFungResponse) {
    auto p = with_orientations(generate_polycrystal(3, 1, {4, 4, 4}), 3);
    const Mat3 F = mild_deformation();
    const auto h = taylor_homogenize(p, F);
    const auto r = fung_response(F, p.orientations[0]);
    EXPECT_DOUBLE_EQ(h.psi, r.psi);
    EXPECT_LT((h.S - to_voigt(r.S)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Taylor, IdenticalOrientationsCollapse) {
    auto p = generate_polycrystal(4, 2, {4, 4, 4});
    p.orientations = {Orientation{0.2, 0.4, 0.6}, Orientation{0.2, 0.4, 0.6}};
    const auto h = taylor_homogenize(p, mild_deformation());
    EXPECT_NEAR(h.psi, fung_response(mild_deformation(), p.orientations[0]).psi, 1e-15);
}

TEST(Taylor, MatchesVoxelwiseAverage) {
    const auto p = with_orientations(generate_polycrystal(5, 45, {16, 16, 16}), 5);
    const Mat3 F = mild_deformation();
    double psi = 0.0;
    Mat3 S = Mat3::Zero();
    for (auto l : p.labels) {
        const auto r = fung_response(F, p.orientations[l]);
        psi += r.psi;
        S += r.S;
    }
    psi /= double(p.labels.size());
    S /= double(p.labels.size());
    const auto h = taylor_homogenize(p, F);
    EXPECT_NEAR(h.psi, psi, 1e-12);
    EXPECT_LT((h.S - to_voigt(S)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Fft, HomogeneousRveConvergesImmediately) {
    auto p = generate_polycrystal(6, 5, {8, 8, 8});
    p.orientations.assign(5, Orientation{0.5, 0.3, 1.2});
    FftConfig cfg;
    cfg.tol = 1e-10;
    const auto r = fft_homogenize(p, mild_deformation(), cfg);
    const auto ref = fung_response(mild_deformation(), p.orientations[0]);
    EXPECT_TRUE(r.converged);
    EXPECT_LE(r.iterations, 2);
    EXPECT_LT(r.residual, 1e-10);
    EXPECT_NEAR(r.psi, ref.psi, 1e-10);
    EXPECT_LT((r.S - to_voigt(ref.S)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Fft, SingleGrainMatchesTaylor) {
    const auto p = with_orientations(generate_polycrystal(8, 1, {6, 6, 6}), 8);
    const auto r = fft_homogenize(p, mild_deformation());
    const auto t = taylor_homogenize(p, mild_deformation());
    EXPECT_NEAR(r.psi, t.psi, 1e-12);
    EXPECT_LT((r.S - t.S).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Fft, RelaxedEnergyDoesNotExceedTaylor) {
    const auto p = with_orientations(generate_polycrystal(9, 4, {8, 8, 8}), 9);
    Mat3 F = Mat3::Identity();
    F(0, 0) += 0.01;
    F(1, 2) += 0.005;
    F(2, 2) += 0.008;
    FftConfig cfg;
    cfg.tol = 1e-10;
    const auto r = fft_homogenize(p, F, cfg);
    ASSERT_TRUE(r.converged);
    EXPECT_LE(r.psi, taylor_homogenize(p, F).psi + 1e-12);
}

TEST(Fft, ConfigurationIsValidated) {
    FftConfig cfg;
    cfg.tol = 0.0;
    EXPECT_THROW(validate(cfg), std::invalid_argument);
    EXPECT_EQ(parse_homogenizer(to_string(Homogenizer::fft)), Homogenizer::fft);
    EXPECT_THROW(parse_homogenizer("voigt"), std::invalid_argument);
}

TEST(Dataset, RecordCountsAndDeterminism) {
    const std::vector<Polycrystal> rves = {with_orientations(generate_polycrystal(1, 6, {8, 8, 8}), 1),
                                           with_orientations(generate_polycrystal(2, 6, {8, 8, 8}), 2)};
    const std::vector<int> ids = {0, 1};
    DatasetOptions opts;
    const auto a = build_dataset(std::span(rves).first(1), std::span(ids).first(1), opts);
    EXPECT_EQ(a.size(), 200u);
    const auto b = build_dataset(rves, ids, opts);
    EXPECT_EQ(b.size(), 400u);
    for (std::size_t i = 0; i < 200; ++i) {
        EXPECT_EQ(a[i].C, b[i].C);
        EXPECT_EQ(a[i].psi, b[i].psi);
    }
    EXPECT_EQ(b[399].rve_id, 1);
    opts.samples_per_rve = 0;
    EXPECT_THROW(build_dataset(rves, ids, opts), std::invalid_argument);
}

TEST(Dataset, LabelsAreConsistentWithTheDeformation) {
    const std::vector<Polycrystal> rves = {with_orientations(generate_polycrystal(1, 6, {8, 8, 8}), 1)};
    const std::vector<int> ids = {3};
    DatasetOptions opts;
    opts.samples_per_rve = 5;
    for (const auto& s : build_dataset(rves, ids, opts)) {
        EXPECT_EQ(s.rve_id, 3);
        const Mat3 C = from_voigt(s.C);
        EXPECT_GT(C.determinant(), 0.0);
        EXPECT_GT(s.psi, 0.0);
    }
}
