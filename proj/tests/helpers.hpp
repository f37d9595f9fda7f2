/*
 * Shared fixtures for the unit tests and the acceptance runner.
 */
#pragma once

#include <cmath>
#include <numbers>
#include <random>

#include "rieffel/coeff_algebra.hpp"
#include "rieffel/grid.hpp"

namespace testing {

using rieffel::cplx;
using rieffel::MatrixElement;

inline constexpr double kPi = std::numbers::pi;

inline MatrixElement random_matrix(int k, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> nd(0.0, scale);
    MatrixElement m(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) m(i, j) = cplx(nd(rng), nd(rng));
    return m;
}

inline MatrixElement random_hermitian(int k, std::mt19937_64& rng, double scale = 1.0) {
    MatrixElement m = random_matrix(k, rng, scale);
    return 0.5 * (m + m.adjoint());
}

// Gaussian e^{-|x - c|^2 / (2 s^2)} times a constant matrix.
inline rieffel::Field gaussian(const rieffel::Grid& g, const MatrixElement& c, double s,
                               const std::vector<double>& center = {}) {
    return rieffel::sample(g, c.rows(), c.cols(), [&](const std::vector<double>& x) {
        double r2 = 0.0;
        for (size_t a = 0; a < x.size(); ++a) {
            double d = x[a] - (center.empty() ? 0.0 : center[a]);
            r2 += d * d;
        }
        return MatrixElement(std::exp(-r2 / (2.0 * s * s)) * c);
    });
}

inline double max_diff(const rieffel::Field& a, const rieffel::Field& b) { return (a - b).max_abs(); }

}  // namespace testing
