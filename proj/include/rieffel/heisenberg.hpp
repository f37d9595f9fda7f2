/*
 * Heisenberg group action on E_n and its adjoint action on operators.
 *
 *   U_{a,b,c} f(x) = e^{-ic} e^{i b.x} f(x - a)
 *   (Ad U)(a, b)(A) = U A U^{-1},  so (Ad U)(a, b) Op(s) = Op(s(x - a, xi - b))
 *
 * Generators delta_j, j < n, differentiate in a_j; delta_{n+j} in b_j.
 * Also: seminorms rho_m, differential norms T_k / s_m, the Appendix C
 * kernels gamma_1, gamma_2, u, v, the operator D and its inverse, and the
 * symbol map S (n = 1).
 */
#pragma once

#include <utility>

#include "rieffel/pseudodiff.hpp"

namespace rieffel {

struct HeisenbergElement {
    std::vector<double> a, b;
    double c = 0.0;

    static HeisenbergElement identity(int n);
    // (a,b,c)(a',b',c') = (a+a', b+b', c+c'+a.b')
    HeisenbergElement operator*(const HeisenbergElement& o) const;
    HeisenbergElement inverse() const;
};

Field heisenberg_act(const HeisenbergElement& h, const Field& f);

DiscretizedOperator adu_conjugate(const std::vector<double>& a, const std::vector<double>& b,
                                  const DiscretizedOperator& A);

// Exact symbol of (Ad U)(a, b) Op(s) for plane-wave symbols.
PhasePlaneWave adu_symbol(const std::vector<double>& a, const std::vector<double>& b, const PhasePlaneWave& s);

enum class DeltaRoute { Auto, Symbol, FiniteDifference };

// delta^alpha A, alpha in N^{2n}.  The symbol route is (-1)^{|alpha|} Op(d^alpha s).
// Finite differences are central and Richardson-extrapolated once.  fd_step <= 0
// takes one lattice step per generator, where the discrete Ad U is exact; a small
// explicit step (1e-2) suits action on vectors that vanish near the box edge.
DiscretizedOperator delta(const DiscretizedOperator& A, const MultiIndex& alpha, DeltaRoute route = DeltaRoute::Auto,
                          double fd_step = 0.0);

constexpr int kMaxFiniteDifferenceOrder = 4;

double rho_m(const DiscretizedOperator& A, int m, DeltaRoute route = DeltaRoute::Auto, const NormOptions& opt = {});

struct DifferentialNormReport {
    std::vector<double> T, s;
};

DifferentialNormReport differential_norms(const DiscretizedOperator& L, int m, DeltaRoute route = DeltaRoute::Auto,
                                          const NormOptions& opt = {});

double gamma1(double t);
double gamma2(double t);

// D = (1 + d_xi)^2 (1 + d_x)^2 on n = 1 phase space.
PhaseSymbol d_apply(const PhaseSymbol& a);
// a = (gamma2 x gamma2) * b, quadrature truncated at tail mass 1e-10.
PhaseSymbol d_inverse(const PhaseSymbol& b);

// conj u(s, eta) v(t, eta), the Appendix C Lemma kernels.
cplx kernel_u_conj(double s, double eta);
cplx kernel_v(double t, double eta);
// | int conj(u) v d eta - gamma2(-s) gamma2(-t) e^{-ist} |
double kernel_identity_residual(double s, double t);

struct SymbolMapSpec {
    int N = 128;
    double L = 0.0;          // 0: sqrt(pi N / 2), the self-dual box
    int panels = 10;         // eta quadrature per kernel column
    int nodes = 48;
    double eta_span = 40.0;  // integrand below 1e-12 beyond this
    double route_tol = 1e-3;
    int workers = 1;

    Grid grid() const;
};

struct SymbolMapReport {
    double route_disagreement = 0.0;  // relative, FD route vs symbol route
    bool symbol_route = false;
};

// S(A) sampled on the phase grid of spec.grid(); A must act on that grid.
PhaseGrid symbol_map_S(const DiscretizedOperator& A, const SymbolMapSpec& spec = {},
                       SymbolMapReport* report = nullptr);

double kernel_u_norm();  // |u|_2 on R^2, by quadrature
double kernel_v_norm();  // |v|_2 = sqrt(pi)/2

// (sup |a|, (2 pi)^{1/2} |u|_2 |v|_2 |D[(Ad U)(-x,-xi) Op(a)]|_0|), n = 1.
std::pair<double, double> inverse_cv_bound(const PhaseSymbol& a, const SymbolMapSpec& spec = {},
                                           const NormOptions& opt = {});

}  // namespace rieffel
