#include "polygnn/homogenization.hpp"

#include "polygnn/errors.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace polygnn {

void validate(const FftConfig& cfg) {
    if (!(cfg.tol > 0.0)) throw std::invalid_argument("fft: tol must be positive");
    if (cfg.max_iter < 1) throw std::invalid_argument("fft: max_iter must be >= 1");
    if (!(cfg.ref_stiffness_scale > 0.0)) throw std::invalid_argument("fft: ref_stiffness_scale must be positive");
}

std::string to_string(Homogenizer h) { return h == Homogenizer::taylor ? "taylor" : "fft"; }

Homogenizer parse_homogenizer(const std::string& s) {
    if (s == "taylor") return Homogenizer::taylor;
    if (s == "fft") return Homogenizer::fft;
    throw std::invalid_argument("unknown homogenizer: " + s);
}

Mat3 sample_deformation(std::mt19937_64& rng, double max_component) {
    std::uniform_real_distribution<double> u(0.0, max_component);
    for (;;) {
        Mat3 F = Mat3::Identity();
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) F(i, j) += u(rng);
        if (F.determinant() > 0.0) return F;
    }
}

Mat3 sample_deformation(std::uint64_t seed, double max_component) {
    std::mt19937_64 rng(seed);
    return sample_deformation(rng, max_component);
}

HomogenizedResponse taylor_homogenize(const Polycrystal& p, const Mat3& F, const FungConstants& k) {
    validate(p);
    const auto v = p.volume_fractions();
    const Mat3 E = green_strain(F);
    HomogenizedResponse out;
    Mat3 S = Mat3::Zero();
    for (std::size_t g = 0; g < p.n_grains(); ++g) {
        out.psi += v[g] * fung_energy(E, p.orientations[g], k);
        S += v[g] * fung_stress(E, p.orientations[g], k);
    }
    out.S = to_voigt(S);
    return out;
}

ReferenceMedium reference_medium(const FungConstants& k, const FftConfig& cfg) {
    return {cfg.ref_stiffness_scale * k.lambda.mean(), cfg.ref_stiffness_scale * k.mu.mean()};
}

namespace {

struct FftwDeleter {
    void operator()(fftw_complex* p) const { fftw_free(p); }
};
using FftwBuffer = std::unique_ptr<fftw_complex[], FftwDeleter>;

FftwBuffer make_buffer(std::size_t n) {
    return FftwBuffer(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n)));
}

// The FFTW planner is not reentrant.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

class FftPlans {
public:
    FftPlans(const GridDims& g, fftw_complex* in, fftw_complex* out) {
        std::lock_guard lock(planner_mutex());
        forward_ = fftw_plan_dft_3d(g.nx, g.ny, g.nz, in, out, FFTW_FORWARD, FFTW_ESTIMATE);
        backward_ = fftw_plan_dft_3d(g.nx, g.ny, g.nz, in, out, FFTW_BACKWARD, FFTW_ESTIMATE);
        if (!forward_ || !backward_) throw NumericError("fft: plan creation failed");
    }
    ~FftPlans() {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(backward_);
    }
    FftPlans(const FftPlans&) = delete;
    FftPlans& operator=(const FftPlans&) = delete;

    void forward(fftw_complex* in, fftw_complex* out) const { fftw_execute_dft(forward_, in, out); }
    void backward(fftw_complex* in, fftw_complex* out) const { fftw_execute_dft(backward_, in, out); }

private:
    fftw_plan forward_ = nullptr;
    fftw_plan backward_ = nullptr;
};

struct Frequency {
    Vec3 xi;
    bool zero = false;
    bool nyquist = false;
};

int wave_number(int i, int n) { return i <= (n - 1) / 2 ? i : i - n; }

std::vector<Frequency> frequency_table(const GridDims& g) {
    std::vector<Frequency> table(g.voxel_count());
    const int dims[3] = {g.nx, g.ny, g.nz};
    for (int i = 0; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) {
            for (int k = 0; k < g.nz; ++k) {
                const int idx[3] = {i, j, k};
                Frequency f;
                for (int a = 0; a < 3; ++a) {
                    f.xi[a] = 2.0 * std::numbers::pi * wave_number(idx[a], dims[a]);
                    if (dims[a] % 2 == 0 && idx[a] == dims[a] / 2) f.nyquist = true;
                }
                f.zero = (i == 0 && j == 0 && k == 0);
                table[g.index(i, j, k)] = f;
            }
        }
    }
    return table;
}

using Field = std::vector<Mat3>;

}  // namespace

FftResult fft_homogenize(const Polycrystal& p, const Mat3& F_bar, const FftConfig& cfg, const FungConstants& k) {
    validate(p);
    validate(cfg);
    if (!(F_bar.determinant() > 0.0)) throw std::invalid_argument("fft: det(F_bar) must be positive");

    const auto& grid = p.grid;
    const std::size_t n = grid.voxel_count();
    const double inv_n = 1.0 / static_cast<double>(n);
    const ReferenceMedium ref = reference_medium(k, cfg);
    const auto freqs = frequency_table(grid);

    auto in = make_buffer(n);
    auto out = make_buffer(n);
    const FftPlans plans(grid, in.get(), out.get());

    // spectra[c][v] for the 9 tensor components
    std::vector<std::vector<std::complex<double>>> spectra(9, std::vector<std::complex<double>>(n));
    auto transform_field = [&](const Field& f) {
        for (int c = 0; c < 9; ++c) {
            const int r = c / 3, s = c % 3;
            for (std::size_t v = 0; v < n; ++v) {
                in[v][0] = f[v](r, s);
                in[v][1] = 0.0;
            }
            plans.forward(in.get(), out.get());
            for (std::size_t v = 0; v < n; ++v) spectra[std::size_t(c)][v] = {out[v][0], out[v][1]};
        }
    };

    Field F(n, F_bar);
    Field P(n);
    FftResult result;

    auto evaluate_stress = [&]() {
        Mat3 P_sum = Mat3::Zero();
        for (std::size_t v = 0; v < n; ++v) {
            const Mat3 E = green_strain(F[v]);
            P[v] = F[v] * fung_stress(E, p.orientations[p.labels[v]], k);
            P_sum += P[v];
        }
        return Mat3(P_sum * inv_n);
    };

    for (int iter = 0;; ++iter) {
        const Mat3 P_bar = evaluate_stress();
        transform_field(P);

        // equilibrium residual sqrt(<|div P|^2>) / |P_bar|, Nyquist modes excluded
        double div_sq = 0.0;
        for (std::size_t v = 0; v < n; ++v) {
            if (freqs[v].zero || freqs[v].nyquist) continue;
            for (int r = 0; r < 3; ++r) {
                std::complex<double> d = 0.0;
                for (int s = 0; s < 3; ++s) d += spectra[std::size_t(3 * r + s)][v] * freqs[v].xi[s];
                div_sq += std::norm(d);
            }
        }
        const double p_norm = P_bar.norm();
        result.residual = std::sqrt(div_sq) * inv_n / (p_norm > 0.0 ? p_norm : 1.0);
        result.iterations = iter;
        result.P_bar = P_bar;
        if (!std::isfinite(result.residual)) break;
        if (result.residual < cfg.tol) {
            result.converged = true;
            break;
        }
        if (iter >= cfg.max_iter) break;

        // polarization tau = P - C0:F
        Field tau(n);
        for (std::size_t v = 0; v < n; ++v) {
            const Mat3& f = F[v];
            tau[v] = P[v] - (ref.lambda * f.trace() * Mat3::Identity() + ref.mu * (f + f.transpose()));
        }
        transform_field(tau);

        // F_hat(xi) = -Gamma(xi) tau_hat(xi); mean pinned to F_bar
        std::vector<std::array<std::complex<double>, 9>> update(n);
        const double ratio = (ref.lambda + ref.mu) / (ref.lambda + 2.0 * ref.mu);
        for (std::size_t v = 0; v < n; ++v) {
            auto& u = update[v];
            u.fill(0.0);
            const auto& f = freqs[v];
            if (f.zero) {
                for (int c = 0; c < 9; ++c) u[std::size_t(c)] = F_bar(c / 3, c % 3) * static_cast<double>(n);
                continue;
            }
            if (f.nyquist) continue;
            const double xi2 = f.xi.squaredNorm();
            const Mat3 N = (Mat3::Identity() - ratio * f.xi * f.xi.transpose() / xi2) / (ref.mu * xi2);
            std::complex<double> tx[3];  // tau_kl xi_l
            for (int kk = 0; kk < 3; ++kk) {
                tx[kk] = 0.0;
                for (int l = 0; l < 3; ++l) tx[kk] += spectra[std::size_t(3 * kk + l)][v] * f.xi[l];
            }
            for (int i = 0; i < 3; ++i) {
                std::complex<double> ni = 0.0;
                for (int kk = 0; kk < 3; ++kk) ni += N(i, kk) * tx[kk];
                for (int j = 0; j < 3; ++j) u[std::size_t(3 * i + j)] = -ni * f.xi[j];
            }
        }
        for (int c = 0; c < 9; ++c) {
            for (std::size_t v = 0; v < n; ++v) {
                in[v][0] = update[v][std::size_t(c)].real();
                in[v][1] = update[v][std::size_t(c)].imag();
            }
            plans.backward(in.get(), out.get());
            for (std::size_t v = 0; v < n; ++v) F[v](c / 3, c % 3) = out[v][0] * inv_n;
        }
    }

    Mat3 S_sum = Mat3::Zero();
    double psi_sum = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
        const Mat3 E = green_strain(F[v]);
        const auto& o = p.orientations[p.labels[v]];
        psi_sum += fung_energy(E, o, k);
        S_sum += fung_stress(E, o, k);
    }
    result.psi = psi_sum * inv_n;
    result.S = to_voigt(S_sum * inv_n);
    return result;
}

std::vector<DeformationSample> build_dataset(std::span<const Polycrystal> rves, std::span<const int> rve_ids,
                                             const DatasetOptions& opts) {
    if (rves.empty()) throw std::invalid_argument("build_dataset: need at least one RVE");
    if (rves.size() != rve_ids.size()) throw std::invalid_argument("build_dataset: one id per RVE required");
    if (opts.samples_per_rve < 1) throw std::invalid_argument("build_dataset: samples_per_rve must be >= 1");
    std::vector<DeformationSample> out;
    out.reserve(rves.size() * static_cast<std::size_t>(opts.samples_per_rve));
    for (std::size_t r = 0; r < rves.size(); ++r) {
        for (int s = 0; s < opts.samples_per_rve; ++s) {
            std::mt19937_64 rng(mix_seed(opts.master_seed, static_cast<std::uint64_t>(rve_ids[r]),
                                         static_cast<std::uint64_t>(s)));
            const Mat3 F = sample_deformation(rng, opts.max_strain_component);
            DeformationSample sample;
            sample.rve_id = rve_ids[r];
            sample.C = to_voigt(right_cauchy_green(F));
            if (opts.homogenizer == Homogenizer::taylor) {
                const auto h = taylor_homogenize(rves[r], F, opts.constants);
                sample.psi = h.psi;
                sample.S = h.S;
            } else {
                const auto h = fft_homogenize(rves[r], F, opts.fft, opts.constants);
                if (!h.converged) {
                    throw NumericError("fft homogenization did not converge for rve " + std::to_string(rve_ids[r]) +
                                       " sample " + std::to_string(s) + " (residual " +
                                       std::to_string(h.residual) + ")");
                }
                sample.psi = h.psi;
                sample.S = h.S;
            }
            out.push_back(sample);
        }
    }
    return out;
}

}  // namespace polygnn
