/*
 * The deformed product f x_J g, phase-space symbol calculus (a-dagger and
 * a x b), the tilde map, and the Fourier-inversion identity.
 *
 * Oscillatory integrals (2 pi)^{-n} int int e^{-i z.eta} F(z, eta) are
 * regularized per coordinate pair:
 *   e^{-iz eta} = (1+z^2)^{-N} (1-d_eta^2)^N (1+eta^2)^{-M} (1-d_z^2)^M e^{-iz eta}
 * integrated by parts onto F, then truncated to [-R, R]^2 and summed with a
 * Q-point Gauss-Legendre rule on each axis.
 */
#pragma once

#include <string>
#include <vector>

#include "rieffel/symbols.hpp"

namespace rieffel {

struct OscIntegralConfig {
    int N_reg = 2;
    int M_reg = 2;
    double R = 24.0;
    int Q = 768;
    double tol = 1e-6;
    int verify_points = 8;

    void validate(int n) const;
};

// e_p x_J e_q = e^{-2 pi i p.Jq} e_{p+q}, coefficients c_p c_q.
PlaneWaveSymbol deformed_product_exact(const PlaneWaveSymbol& f, const PlaneWaveSymbol& g,
                                       const DeformationMatrix& J);

struct ProductReport {
    double disagreement = 0.0;  // max over check points, relative to |f|_sup |g|_sup
    int points_checked = 0;
    std::string oracle;         // "quadrature" or "plane-wave"
};

// Fast route only: sum_p f_p e_p(x) g(x + Jp) with spectral shifts of g.
Field twisted_product(const Field& f, const Field& g, const DeformationMatrix& J);

// Fast route, checked against an independent evaluation at cfg.verify_points
// points.  Throws ConvergenceError beyond 10 cfg.tol.
Field deformed_product_numeric(const Field& f, const Field& g, const DeformationMatrix& J,
                               const OscIntegralConfig& cfg = {}, ProductReport* report = nullptr);

// f~(x, xi) = f(x - J xi / (2 pi)).
PhasePlaneWave tilde_map(const PlaneWaveSymbol& f, const DeformationMatrix& J);
// Grid input: exact for the trigonometric interpolant of f.
PhasePlaneWave tilde_map(const Field& f, const DeformationMatrix& J, double rel_threshold = 1e-15);

// Regularized (2 pi)^{-n} int int e^{-iz.eta} e^{i(p.z + q.eta)} dz deta,
// which equals e^{i p.q} in the oscillatory sense.
cplx oscillatory_phase(const std::vector<double>& p, const std::vector<double>& q,
                       const OscIntegralConfig& cfg = {});

// a-dagger(x, xi) = (2 pi)^{-n} int int e^{-iz.eta} a(x-z, xi-eta)* dz deta.
PhasePlaneWave symbol_dagger(const PhasePlaneWave& a, const OscIntegralConfig& cfg = {});
PhaseGrid symbol_dagger(const PhaseGrid& a, const OscIntegralConfig& cfg = {});
PhaseSymbol symbol_dagger(const PhaseSymbol& a, const OscIntegralConfig& cfg = {});

// (a x b)(x, xi) = (2 pi)^{-n} int int e^{-iz.eta} a(x, xi-eta) b(x-z, xi) dz deta.
PhasePlaneWave symbol_compose(const PhasePlaneWave& a, const PhasePlaneWave& b,
                              const OscIntegralConfig& cfg = {});
PhaseGrid symbol_compose(const PhaseGrid& a, const PhaseGrid& b, const OscIntegralConfig& cfg = {});
PhaseSymbol symbol_compose(const PhaseSymbol& a, const PhaseSymbol& b, const OscIntegralConfig& cfg = {});

// |f(x) - int int e^{2 pi i u.v} f(x+v) du dv| with the regularized integral.
double fourier_inversion_check(const PlaneWaveSymbol& f, const std::vector<double>& x,
                               const OscIntegralConfig& cfg = {});
// n = 1 grids; f is continued by zero outside the box when it decays there.
double fourier_inversion_check(const Field& f, const std::vector<double>& x,
                               const OscIntegralConfig& cfg = {});

}  // namespace rieffel
