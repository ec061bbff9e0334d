#pragma once

#include "polygnn/tensor.hpp"

#include <span>
#include <vector>

namespace polygnn {

/// Mean squared difference after min-max scaling both series with the
/// minimum and maximum of the true series.
double scaled_mse(std::span<const double> pred, std::span<const double> truth);

/// Right-continuous empirical CDF: F(t) = #{v <= t} / N.
struct Ecdf {
    std::vector<double> values;  // sorted ascending, duplicates kept

    double operator()(double t) const;
    /// Step points (distinct values and the cumulative fraction reached there).
    std::vector<std::pair<double, double>> steps() const;
    /// Smallest value whose F reaches q, q in (0,1].
    double quantile(double q) const;
    double median() const { return quantile(0.5); }
};

Ecdf ecdf(std::span<const double> values);

struct PrincipalDecomposition {
    Vec3 values;  // descending
    Mat3 vectors;  // columns match values
};

PrincipalDecomposition principal_decomposition(const Mat3& S);

struct PrincipalError {
    double value_error = 0.0;      // mean squared eigenvalue difference
    double direction_error = 0.0;  // mean of 1 - |cos| over separated eigenpairs
};

/// Compares eigen-decompositions of two symmetric tensors. Eigenvectors whose
/// true eigenvalue is within rel_gap of a neighbour are skipped for the direction term.
PrincipalError principal_metrics(const Mat3& S_pred, const Mat3& S_true, double rel_gap = 1e-8);

/// Series-level scaled MSEs over a group of stress predictions.
struct StressSeriesError {
    double principal_values = 0.0;
    double principal_directions = 0.0;
};

StressSeriesError stress_series_error(std::span<const Voigt> pred, std::span<const Voigt> truth);

}  // namespace polygnn
