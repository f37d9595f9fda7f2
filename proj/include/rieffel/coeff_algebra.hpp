/*
 * Coefficient algebra C = M_k(C): norms, spectra, the unitization,
 * self-adjoint functional calculus and a few algebraic checks.
 */
#pragma once

#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "rieffel/errors.hpp"

namespace rieffel {

using cplx = std::complex<double>;
using MatrixElement = Eigen::MatrixXcd;

// Largest singular value.
double cstar_norm(const MatrixElement& a);

double condition_number(const MatrixElement& a);

bool is_self_adjoint(const MatrixElement& a, double rel_tol = 1e-12);

struct Spectrum {
    std::vector<cplx> values;    // eigenvalues, duplicates merged
    std::vector<cplx> unitized;  // values plus 0
};

Spectrum spectrum(const MatrixElement& a, double merge_tol = 1e-9);

double spectral_radius(const std::vector<cplx>& sigma);

struct UnitizedElement {
    MatrixElement body;
    cplx scalar{0.0, 0.0};

    UnitizedElement operator*(const UnitizedElement& o) const;
    static UnitizedElement unit(int k);
};

UnitizedElement unitized_inverse(const UnitizedElement& x);

// f(b) = U diag(f(lambda)) U* for self-adjoint b.
MatrixElement smooth_calculus(const std::function<double(double)>& f, const MatrixElement& b);

// Smooth cutoff: 1 on [-eps/3, eps/3], 0 outside [-2eps/3, 2eps/3].
double mollifier_cutoff(double t, double eps);

// f(y) with f(t) = t (1 - chi(t)).
MatrixElement lemma_uniq_smooth(const MatrixElement& y, double eps);

using Representation = std::function<MatrixElement(const MatrixElement&)>;

// Checks rho on the matrix units of M_k, then returns ||rho(b)||.
double seminorm_from_rep(const Representation& rho, const MatrixElement& b);

// Inverse of b lies in the unital algebra generated by basis.
bool spectral_invariance_check(const MatrixElement& b, const std::vector<MatrixElement>& basis);

}  // namespace rieffel
