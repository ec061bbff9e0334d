#include "polygnn/metrics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace polygnn {

double scaled_mse(std::span<const double> pred, std::span<const double> truth) {
    if (pred.size() != truth.size()) throw std::invalid_argument("scaled_mse: length mismatch");
    if (truth.size() < 2) throw std::invalid_argument("scaled_mse: need at least two values");
    const auto [lo_it, hi_it] = std::minmax_element(truth.begin(), truth.end());
    const double lo = *lo_it, range = *hi_it - *lo_it;
    if (!(range > 0.0)) throw std::invalid_argument("scaled_mse: true series is constant");
    double acc = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double d = (truth[i] - lo) / range - (pred[i] - lo) / range;
        acc += d * d;
    }
    return acc / double(truth.size());
}

Ecdf ecdf(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("ecdf: empty input");
    Ecdf e;
    e.values.assign(values.begin(), values.end());
    std::sort(e.values.begin(), e.values.end());
    return e;
}

double Ecdf::operator()(double t) const {
    const auto it = std::upper_bound(values.begin(), values.end(), t);
    return double(it - values.begin()) / double(values.size());
}

std::vector<std::pair<double, double>> Ecdf::steps() const {
    std::vector<std::pair<double, double>> out;
    const double n = double(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i + 1 < values.size() && values[i + 1] == values[i]) continue;
        out.emplace_back(values[i], double(i + 1) / n);
    }
    return out;
}

double Ecdf::quantile(double q) const {
    if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("ecdf: quantile level must lie in (0,1]");
    const double n = double(values.size());
    auto r = static_cast<std::size_t>(std::ceil(q * n - 1e-12));
    r = std::clamp<std::size_t>(r, 1, values.size());
    return values[r - 1];
}

PrincipalDecomposition principal_decomposition(const Mat3& S) {
    Eigen::SelfAdjointEigenSolver<Mat3> solver(S);
    PrincipalDecomposition d;
    for (int i = 0; i < 3; ++i) {
        d.values[i] = solver.eigenvalues()[2 - i];
        d.vectors.col(i) = solver.eigenvectors().col(2 - i);
    }
    return d;
}

PrincipalError principal_metrics(const Mat3& S_pred, const Mat3& S_true, double rel_gap) {
    const auto p = principal_decomposition(S_pred);
    const auto t = principal_decomposition(S_true);
    PrincipalError e;
    e.value_error = (p.values - t.values).squaredNorm() / 3.0;

    const double scale = std::max(t.values.cwiseAbs().maxCoeff(), 1e-300);
    int used = 0;
    double acc = 0.0;
    for (int i = 0; i < 3; ++i) {
        bool separated = true;
        for (int j = 0; j < 3; ++j) {
            if (j != i && std::abs(t.values[i] - t.values[j]) <= rel_gap * scale) separated = false;
        }
        if (!separated) continue;
        acc += 1.0 - std::min(1.0, std::abs(p.vectors.col(i).dot(t.vectors.col(i))));
        ++used;
    }
    e.direction_error = used > 0 ? acc / used : 0.0;
    return e;
}

StressSeriesError stress_series_error(std::span<const Voigt> pred, std::span<const Voigt> truth) {
    if (pred.size() != truth.size()) throw std::invalid_argument("stress_series_error: length mismatch");
    const std::size_t n = truth.size();
    std::vector<std::vector<double>> pv(3, std::vector<double>(n)), tv(3, std::vector<double>(n));
    std::vector<double> pd, td;
    pd.reserve(9 * n);
    td.reserve(9 * n);
    for (std::size_t s = 0; s < n; ++s) {
        const auto p = principal_decomposition(from_voigt(pred[s]));
        const auto t = principal_decomposition(from_voigt(truth[s]));
        for (int i = 0; i < 3; ++i) {
            pv[std::size_t(i)][s] = p.values[i];
            tv[std::size_t(i)][s] = t.values[i];
            Vec3 pvec = p.vectors.col(i);
            Vec3 tvec = t.vectors.col(i);
            // eigenvectors are defined up to sign: fix the true one to a canonical
            // sign and align the prediction with it
            int lead = 0;
            tvec.cwiseAbs().maxCoeff(&lead);
            if (tvec[lead] < 0.0) tvec = -tvec;
            if (pvec.dot(tvec) < 0.0) pvec = -pvec;
            for (int c = 0; c < 3; ++c) {
                pd.push_back(pvec[c]);
                td.push_back(tvec[c]);
            }
        }
    }
    StressSeriesError e;
    for (int i = 0; i < 3; ++i) e.principal_values += scaled_mse(pv[std::size_t(i)], tv[std::size_t(i)]) / 3.0;
    e.principal_directions = scaled_mse(pd, td);
    return e;
}

}  // namespace polygnn
