/*
 * C-valued functions on R^n: exact plane-wave sums, grid samples, and their
 * phase-space (x, xi) counterparts used as pseudodifferential symbols.
 *
 * Frequency conventions: a PlaneWaveSymbol term with integer vector m on a
 * box of half-width L is e^{2 pi i p.x} with p = m/(2L) cycles per unit
 * length.  Phase-space plane waves carry angular frequencies directly:
 * c e^{i(alpha.x + beta.xi)}.
 */
#pragma once

#include <map>
#include <variant>
#include <vector>

#include "rieffel/grid.hpp"

namespace rieffel {

using MultiIndex = std::vector<int>;

constexpr int kMaxDerivativeOrder = 8;

// All multi-indices of length dim with total order exactly k (lexicographic).
std::vector<MultiIndex> multi_indices(int dim, int k);

int order(const MultiIndex& a);

struct DeformationMatrix {
    int n = 0;
    Eigen::MatrixXd J;

    static DeformationMatrix from(const Eigen::MatrixXd& m);
    static DeformationMatrix zero(int n);
    // theta * [[0, 1], [-1, 0]] repeated on 2x2 diagonal blocks; n even.
    static DeformationMatrix symplectic(int n, double theta);

    Eigen::VectorXd apply(const Eigen::VectorXd& v) const { return J * v; }
};

using GridSymbol = Field;
using ModuleVector = Field;

struct PlaneWaveSymbol {
    int n = 1;
    double L = 1.0;
    int k = 1;
    std::map<std::vector<int>, MatrixElement> terms;

    PlaneWaveSymbol() = default;
    PlaneWaveSymbol(int n, double L, int k) : n(n), L(L), k(k) {}

    static PlaneWaveSymbol constant(int n, double L, const MatrixElement& c);
    static PlaneWaveSymbol single(double L, const std::vector<int>& m, const MatrixElement& c);

    void add(const std::vector<int>& m, const MatrixElement& c);
    void prune(double tol = 0.0);
    Eigen::VectorXd frequency(const std::vector<int>& m) const;  // p = m / (2L)
    MatrixElement evaluate(const std::vector<double>& x) const;
    Field sample(const Grid& g) const;
    PlaneWaveSymbol adjoint() const;  // pointwise f(x)*
    int max_abs_frequency() const;
};

// Exact coefficients of a grid field viewed as a trigonometric polynomial:
// f(x) = sum_m c_m e^{i pi m.x / L} over the FFT band of each axis.
struct GridMode {
    std::vector<int> m;
    MatrixElement c;
};
std::vector<GridMode> grid_modes(const Field& f, double rel_threshold = 0.0);
PlaneWaveSymbol to_plane_waves(const Field& f, double rel_threshold = 0.0);

struct PhasePlaneWave {
    struct Term {
        std::vector<double> alpha, beta;
        MatrixElement c;
    };
    int n = 1;
    int k = 1;
    std::vector<Term> terms;

    PhasePlaneWave() = default;
    PhasePlaneWave(int n, int k) : n(n), k(k) {}

    static PhasePlaneWave constant(int n, const MatrixElement& c);
    // PlaneWaveSymbol on R^{2n}, variables ordered (x, xi).
    static PhasePlaneWave from_plane_wave(const PlaneWaveSymbol& f);
    // x-only symbol a(x, xi) = f(x).
    static PhasePlaneWave from_x_symbol(const PlaneWaveSymbol& f);

    void add(const std::vector<double>& alpha, const std::vector<double>& beta, const MatrixElement& c);
    void compress(double tol = 0.0);  // merge equal frequencies, drop zeros
    MatrixElement evaluate(const std::vector<double>& x, const std::vector<double>& xi) const;
    PhasePlaneWave derivative(const MultiIndex& ax, const MultiIndex& axi) const;
    PhasePlaneWave scaled(cplx s) const;
    PhasePlaneWave operator+(const PhasePlaneWave& o) const;
};

// Symbol sampled on x-grid times its dual grid (2n axes).
struct PhaseGrid {
    int n = 1;
    Field f;

    Grid x_grid() const;
    static PhaseGrid sample(const PhasePlaneWave& a, const Grid& xg);
    static PhaseGrid sample(const Grid& xg, int k,
                            const std::function<MatrixElement(const std::vector<double>&,
                                                              const std::vector<double>&)>& a);
};

using PhaseSymbol = std::variant<PhasePlaneWave, PhaseGrid>;

PhasePlaneWave to_phase_plane_waves(const PhaseGrid& a, double rel_threshold = 0.0);

int phase_dim(const PhaseSymbol& a);
int phase_k(const PhaseSymbol& a);

// Derivatives.
PlaneWaveSymbol derivative(const PlaneWaveSymbol& f, const MultiIndex& alpha);
Field derivative(const Field& f, const MultiIndex& alpha);
PhaseGrid derivative(const PhaseGrid& a, const MultiIndex& ax, const MultiIndex& axi);
PhaseSymbol derivative(const PhaseSymbol& a, const MultiIndex& ax, const MultiIndex& axi);

// Admissibility.
double boundary_ratio(const Field& f);  // max boundary norm / max interior norm
bool is_decaying(const Field& f, double tol = 1e-10);
double spectral_tail(const Field& f);   // max outer-band coefficient / max coefficient
bool is_band_limited(const Field& f, double tol = 1e-10);
bool is_admissible(const Field& f);

// Seminorms.
double seminorm_B(const Field& f, int m);
double seminorm_B(const PlaneWaveSymbol& f, int m);
double seminorm_S(const Field& f, int m);
double plane_wave_sup(const PlaneWaveSymbol& f);
// Sup of a phase plane wave over the phase grid of xg.
double phase_sup(const PhasePlaneWave& a, const Grid& xg);
double phase_sup(const PhaseSymbol& a, const Grid& xg);

// Unitary angular-frequency transform; sign = -1 is the inverse.
Field fourier(const Field& f, int sign);

// Module structure.
MatrixElement inner_product(const Field& f, const Field& g);
double norm_2(const Field& f);
double norm_L2(const Field& f);

}  // namespace rieffel
