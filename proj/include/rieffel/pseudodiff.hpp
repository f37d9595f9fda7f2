/*
 * Kohn-Nirenberg operators on the grid model of E_n:
 *   Op(a)g(x_i) = (2 pi)^{-n/2} dxi^n sum_j e^{i x_i.xi_j} a(x_i, xi_j) ghat(xi_j).
 * Module vectors are Fields with k rows and any number of columns; operators
 * act on the left, so they commute with the right C-action.
 */
#pragma once

#include <functional>
#include <memory>
#include <optional>

#include "rieffel/deformation.hpp"

namespace rieffel {

// g(x + shift) by exact shift of the trigonometric interpolant.
Field translate(const Field& g, const std::vector<double>& shift);

Field op_apply(const PhasePlaneWave& a, const Field& g);
Field op_apply(const PhaseGrid& a, const Field& g);
Field op_apply(const PhaseSymbol& a, const Field& g);

// Exact adjoints of the discrete actions above (weighted l2 on the grid).
Field op_apply_adjoint(const PhasePlaneWave& a, const Field& h);
Field op_apply_adjoint(const PhaseGrid& a, const Field& h);
Field op_apply_adjoint(const PhaseSymbol& a, const Field& h);

class DiscretizedOperator {
public:
    using Action = std::function<Field(const Field&)>;

    DiscretizedOperator(const Grid& domain, const Grid& codomain, int k, Action apply, Action adjoint,
                        std::optional<PhaseSymbol> symbol = std::nullopt);

    static DiscretizedOperator from_symbol(const PhaseSymbol& a, const Grid& xg);
    // Matrix on C^{N^n k}; vector index = point * k + row.
    static DiscretizedOperator dense(const Eigen::MatrixXcd& m, const Grid& g, int k);
    static DiscretizedOperator identity(const Grid& g, int k);
    // The unitary transform, x-grid to dual grid.
    static DiscretizedOperator fourier(const Grid& g, int k);

    Field apply(const Field& g) const;
    Field apply_adjoint(const Field& h) const;
    DiscretizedOperator adjoint() const;

    const Grid& domain() const { return domain_; }
    const Grid& codomain() const { return codomain_; }
    int k() const { return k_; }
    const std::optional<PhaseSymbol>& symbol() const { return symbol_; }

    // Dense matrix of the column action (small grids only).
    Eigen::MatrixXcd to_dense() const;

private:
    Grid domain_, codomain_;
    int k_ = 1;
    std::shared_ptr<const Action> apply_, adjoint_;
    std::optional<PhaseSymbol> symbol_;
};

DiscretizedOperator compose(const DiscretizedOperator& a, const DiscretizedOperator& b);  // a after b
DiscretizedOperator sum(const DiscretizedOperator& a, const DiscretizedOperator& b);
DiscretizedOperator scaled(const DiscretizedOperator& a, cplx s);

// L_f = Op(f~) on the grid xg.
DiscretizedOperator rieffel_operator(const PlaneWaveSymbol& f, const DeformationMatrix& J, const Grid& xg);
DiscretizedOperator rieffel_operator(const Field& f, const DeformationMatrix& J);

struct NormOptions {
    double rel_tol = 1e-8;
    int max_iter = 10000;
    unsigned long long seed = 0x5EED;
};

// Largest singular value, Lanczos on A*A.
double operator_norm(const DiscretizedOperator& a, const NormOptions& opt = {});

// pi(a): max over beta, gamma in {0,1}^n of sup |d_x^beta d_xi^gamma a|.
double cv_functional(const PhaseSymbol& a, const Grid& xg);
double cv_ratio(const PhaseSymbol& a, const Grid& xg, const NormOptions& opt = {});

}  // namespace rieffel
