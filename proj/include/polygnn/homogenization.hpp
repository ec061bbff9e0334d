#pragma once

#include "polygnn/fung.hpp"
#include "polygnn/microstructure.hpp"
#include "polygnn/tensor.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace polygnn {

/// One labelled point of the training database.
struct DeformationSample {
    int rve_id = 0;
    Voigt C = voigt_identity();
    double psi = 0.0;
    Voigt S = Voigt::Zero();
};

struct FftConfig {
    double ref_stiffness_scale = 2.0;
    int max_iter = 500;
    double tol = 1e-8;
};

void validate(const FftConfig& cfg);

enum class Homogenizer { taylor, fft };

std::string to_string(Homogenizer h);
Homogenizer parse_homogenizer(const std::string& s);

/// F = I + U with every component of U uniform in [0, max_component].
Mat3 sample_deformation(std::mt19937_64& rng, double max_component = 0.1);
Mat3 sample_deformation(std::uint64_t seed, double max_component = 0.1);

struct HomogenizedResponse {
    double psi = 0.0;
    Voigt S = Voigt::Zero();
};

/// Uniform-deformation average over grains weighted by volume fraction.
HomogenizedResponse taylor_homogenize(const Polycrystal& p, const Mat3& F, const FungConstants& k = {});

struct FftResult {
    double psi = 0.0;
    Voigt S = Voigt::Zero();
    Mat3 P_bar = Mat3::Zero();
    double residual = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Reference medium used by the spectral solver: isotropic Lame pair built from
/// the mean Fung constants and scaled by cfg.ref_stiffness_scale.
struct ReferenceMedium {
    double lambda = 0.0;
    double mu = 0.0;
};
ReferenceMedium reference_medium(const FungConstants& k, const FftConfig& cfg);

/// Finite-strain Lippmann-Schwinger fixed point solved with FFTs. Does not
/// throw on non-convergence; inspect FftResult::converged.
FftResult fft_homogenize(const Polycrystal& p, const Mat3& F_bar, const FftConfig& cfg = {},
                         const FungConstants& k = {});

struct DatasetOptions {
    int samples_per_rve = 200;
    Homogenizer homogenizer = Homogenizer::taylor;
    std::uint64_t master_seed = 0;
    double max_strain_component = 0.1;
    FftConfig fft{};
    FungConstants constants{};
};

/// Labels samples_per_rve random deformations per RVE. rve_ids[i] names rves[i];
/// sample (r, s) draws from a stream keyed by (master_seed, rve_id, s).
std::vector<DeformationSample> build_dataset(std::span<const Polycrystal> rves, std::span<const int> rve_ids,
                                             const DatasetOptions& opts);

}  // namespace polygnn
