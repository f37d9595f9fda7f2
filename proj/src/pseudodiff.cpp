#include "rieffel/pseudodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

namespace rieffel {

namespace {
constexpr double kPi = std::numbers::pi;

using CMat = Eigen::MatrixXcd;
using RowMap = Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// e^{i s alpha.x} on the grid.
std::vector<cplx> plane_phase(const Grid& g, const std::vector<double>& alpha, double s) {
    std::vector<std::vector<cplx>> axis(g.n);
    for (int a = 0; a < g.n; ++a) {
        axis[a].resize(g.N[a]);
        for (int i = 0; i < g.N[a]; ++i) axis[a][i] = std::polar(1.0, s * alpha[a] * g.coord(a, i));
    }
    std::vector<cplx> e(g.size());
    for (long p = 0; p < g.size(); ++p) {
        auto idx = g.index(p);
        cplx v(1.0, 0.0);
        for (int a = 0; a < g.n; ++a) v *= axis[a][idx[a]];
        e[p] = v;
    }
    return e;
}

// out += c e G, c constant k x k, G with k rows and any columns.
void accumulate(Field& out, const MatrixElement& c, const std::vector<cplx>& e, const Field& G) {
    const long npts = out.npts();
    for (int r = 0; r < out.rows(); ++r)
        for (int t = 0; t < G.rows(); ++t) {
            cplx ct = c(r, t);
            if (ct == cplx(0.0, 0.0)) continue;
            for (int col = 0; col < out.cols(); ++col) {
                cplx* d = out.plane(r, col);
                const cplx* gp = G.plane(t, col);
                for (long p = 0; p < npts; ++p) d[p] += ct * e[p] * gp[p];
            }
        }
}

bool is_zero(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

// Term indices grouped by equal beta.
std::vector<std::vector<size_t>> beta_groups(const PhasePlaneWave& a) {
    std::vector<size_t> order(a.terms.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t x, size_t y) { return a.terms[x].beta < a.terms[y].beta; });
    std::vector<std::vector<size_t>> groups;
    for (size_t i : order) {
        if (groups.empty() || a.terms[groups.back().front()].beta != a.terms[i].beta) groups.emplace_back();
        groups.back().push_back(i);
    }
    return groups;
}

void check_symbol_grid(const PhaseGrid& a, const Field& g) {
    if (!a.x_grid().same_as(g.grid())) throw GridMismatchError("symbol grid and vector grid differ");
    if (a.f.rows() != g.rows()) throw GridMismatchError("symbol and vector have different k");
}

// Kernel (2 pi)^{-n/2} dxi^n e^{i x_i.xi_j} as an nx x nxi matrix.
CMat kn_kernel(const Grid& xg, double sign) {
    Grid dg = xg.dual();
    const long nx = xg.size(), nxi = dg.size();
    double s = 1.0;
    for (int a = 0; a < xg.n; ++a) s *= dg.spacing(a) / std::sqrt(2.0 * kPi);
    CMat K(nx, nxi);
    for (long i = 0; i < nx; ++i) {
        auto x = xg.point(i);
        for (long j = 0; j < nxi; ++j) {
            auto xi = dg.point(j);
            double ph = 0.0;
            for (int a = 0; a < xg.n; ++a) ph += x[a] * xi[a];
            K(i, j) = s * std::polar(1.0, sign * ph);
        }
    }
    return K;
}

CMat columns_of(const Field& f, int row) {
    CMat m(f.npts(), f.cols());
    for (int c = 0; c < f.cols(); ++c) m.col(c) = Eigen::Map<const Eigen::VectorXcd>(f.plane(row, c), f.npts());
    return m;
}

void store_columns(Field& f, int row, const CMat& m) {
    for (int c = 0; c < f.cols(); ++c) Eigen::Map<Eigen::VectorXcd>(f.plane(row, c), f.npts()) = m.col(c);
}
}  // namespace

Field translate(const Field& g, const std::vector<double>& shift) {
    const Grid& gr = g.grid();
    if (static_cast<int>(shift.size()) != gr.n) throw InvalidInputError("shift has the wrong dimension");
    if (is_zero(shift)) return g;
    Field c = mode_coefficients(g);
    std::vector<std::vector<cplx>> axis(gr.n);
    for (int a = 0; a < gr.n; ++a) {
        axis[a].resize(gr.N[a]);
        for (int i = 0; i < gr.N[a]; ++i)
            axis[a][i] = std::polar(1.0, kPi * fft_freq(i, gr.N[a]) * shift[a] / gr.L[a]);
    }
    std::vector<cplx> ph(gr.size());
    for (long p = 0; p < gr.size(); ++p) {
        auto idx = gr.index(p);
        cplx v(1.0, 0.0);
        for (int a = 0; a < gr.n; ++a) v *= axis[a][idx[a]];
        ph[p] = v;
    }
    for (long pl = 0; pl < c.planes(); ++pl) {
        cplx* d = c.plane(pl);
        for (long p = 0; p < gr.size(); ++p) d[p] *= ph[p];
    }
    return from_mode_coefficients(c);
}

Field op_apply(const PhasePlaneWave& a, const Field& g) {
    if (a.n != g.grid().n) throw GridMismatchError("symbol and vector dimensions differ");
    if (a.k != g.rows()) throw GridMismatchError("symbol and vector have different k");
    Field out(g.grid(), g.rows(), g.cols());
    for (const auto& grp : beta_groups(a)) {
        Field gb = translate(g, a.terms[grp.front()].beta);
        for (size_t i : grp) accumulate(out, a.terms[i].c, plane_phase(g.grid(), a.terms[i].alpha, 1.0), gb);
    }
    return out;
}

Field op_apply_adjoint(const PhasePlaneWave& a, const Field& h) {
    if (a.n != h.grid().n) throw GridMismatchError("symbol and vector dimensions differ");
    if (a.k != h.rows()) throw GridMismatchError("symbol and vector have different k");
    Field out(h.grid(), h.rows(), h.cols());
    for (const auto& grp : beta_groups(a)) {
        Field u(h.grid(), h.rows(), h.cols());
        for (size_t i : grp)
            accumulate(u, a.terms[i].c.adjoint(), plane_phase(h.grid(), a.terms[i].alpha, -1.0), h);
        std::vector<double> back(a.terms[grp.front()].beta);
        for (auto& v : back) v = -v;
        out += translate(u, back);
    }
    return out;
}

Field op_apply(const PhaseGrid& a, const Field& g) {
    check_symbol_grid(a, g);
    const Grid& xg = g.grid();
    const int k = g.rows();
    const long nx = xg.size(), nxi = a.f.npts() / nx;
    Field gh = fourier_transform(g, +1);
    CMat K = kn_kernel(xg, 1.0);
    Field out(xg, k, g.cols());
    std::vector<CMat> Gt(k);
    for (int t = 0; t < k; ++t) Gt[t] = columns_of(gh, t);
    for (int r = 0; r < k; ++r) {
        CMat acc = CMat::Zero(nx, g.cols());
        for (int t = 0; t < k; ++t) {
            RowMap A(a.f.plane(r, t), nx, nxi);
            CMat M = K.cwiseProduct(A);
            acc.noalias() += M * Gt[t];
        }
        store_columns(out, r, acc);
    }
    return out;
}

Field op_apply_adjoint(const PhaseGrid& a, const Field& h) {
    check_symbol_grid(a, h);
    const Grid& xg = h.grid();
    const int k = h.rows();
    const long nx = xg.size(), nxi = a.f.npts() / nx;
    // w_j = (2 pi)^{-n/2} dx^n sum_i e^{-i x_i.xi_j} a(x_i, xi_j)* h_i, then F^{-1}.
    CMat K = kn_kernel(xg, -1.0);
    double fix = 1.0;
    for (int d = 0; d < xg.n; ++d) fix *= xg.spacing(d) / xg.dual().spacing(d);
    Field w(xg.dual(), k, h.cols());
    std::vector<CMat> Ht(k);
    for (int t = 0; t < k; ++t) Ht[t] = columns_of(h, t);
    for (int r = 0; r < k; ++r) {
        CMat acc = CMat::Zero(nxi, h.cols());
        for (int t = 0; t < k; ++t) {
            RowMap A(a.f.plane(t, r), nx, nxi);
            CMat M = K.cwiseProduct(A.conjugate());
            acc.noalias() += M.transpose() * Ht[t];
        }
        store_columns(w, r, acc * fix);
    }
    return fourier_transform(w, -1);
}

Field op_apply(const PhaseSymbol& a, const Field& g) {
    if (auto* p = std::get_if<PhasePlaneWave>(&a)) return op_apply(*p, g);
    return op_apply(std::get<PhaseGrid>(a), g);
}

Field op_apply_adjoint(const PhaseSymbol& a, const Field& h) {
    if (auto* p = std::get_if<PhasePlaneWave>(&a)) return op_apply_adjoint(*p, h);
    return op_apply_adjoint(std::get<PhaseGrid>(a), h);
}

// ---------------------------------------------------------------- operators

DiscretizedOperator::DiscretizedOperator(const Grid& domain, const Grid& codomain, int k, Action apply,
                                         Action adjoint, std::optional<PhaseSymbol> symbol)
    : domain_(domain),
      codomain_(codomain),
      k_(k),
      apply_(std::make_shared<const Action>(std::move(apply))),
      adjoint_(std::make_shared<const Action>(std::move(adjoint))),
      symbol_(std::move(symbol)) {}

DiscretizedOperator DiscretizedOperator::from_symbol(const PhaseSymbol& a, const Grid& xg) {
    if (phase_dim(a) != xg.n) throw GridMismatchError("symbol and grid dimensions differ");
    if (auto* pg = std::get_if<PhaseGrid>(&a))
        if (!pg->x_grid().same_as(xg)) throw GridMismatchError("symbol sampled on another grid");
    auto sym = std::make_shared<const PhaseSymbol>(a);
    return DiscretizedOperator(
        xg, xg, phase_k(a), [sym](const Field& g) { return op_apply(*sym, g); },
        [sym](const Field& h) { return op_apply_adjoint(*sym, h); }, a);
}

DiscretizedOperator DiscretizedOperator::dense(const Eigen::MatrixXcd& m, const Grid& g, int k) {
    const long dim = g.size() * k;
    if (m.rows() != dim || m.cols() != dim) throw GridMismatchError("dense matrix has the wrong size");
    auto act = [g, k](const Eigen::MatrixXcd& mat) {
        return [g, k, mat](const Field& v) {
            require_same(v.grid(), g, "dense operator");
            Field out(g, k, v.cols());
            Eigen::VectorXcd x(g.size() * k);
            for (int c = 0; c < v.cols(); ++c) {
                for (long p = 0; p < g.size(); ++p)
                    for (int r = 0; r < k; ++r) x(p * k + r) = v(r, c, p);
                Eigen::VectorXcd y = mat * x;
                for (long p = 0; p < g.size(); ++p)
                    for (int r = 0; r < k; ++r) out(r, c, p) = y(p * k + r);
            }
            return out;
        };
    };
    return DiscretizedOperator(g, g, k, act(m), act(m.adjoint()));
}

DiscretizedOperator DiscretizedOperator::identity(const Grid& g, int k) {
    auto id = [](const Field& v) { return v; };
    return DiscretizedOperator(g, g, k, id, id, PhasePlaneWave::constant(g.n, MatrixElement::Identity(k, k)));
}

DiscretizedOperator DiscretizedOperator::fourier(const Grid& g, int k) {
    return DiscretizedOperator(
        g, g.dual(), k, [](const Field& v) { return fourier_transform(v, +1); },
        [](const Field& v) { return fourier_transform(v, -1); });
}

Field DiscretizedOperator::apply(const Field& g) const {
    if (!g.grid().same_as(domain_)) throw GridMismatchError("vector is not on the operator's domain");
    if (g.rows() != k_) throw GridMismatchError("vector has the wrong number of rows");
    return (*apply_)(g);
}

Field DiscretizedOperator::apply_adjoint(const Field& h) const {
    if (!h.grid().same_as(codomain_)) throw GridMismatchError("vector is not on the operator's codomain");
    if (h.rows() != k_) throw GridMismatchError("vector has the wrong number of rows");
    return (*adjoint_)(h);
}

DiscretizedOperator DiscretizedOperator::adjoint() const {
    std::optional<PhaseSymbol> sym;
    if (symbol_) sym = symbol_dagger(*symbol_);
    auto fwd = apply_, back = adjoint_;
    return DiscretizedOperator(
        codomain_, domain_, k_, [back](const Field& h) { return (*back)(h); },
        [fwd](const Field& g) { return (*fwd)(g); }, sym);
}

Eigen::MatrixXcd DiscretizedOperator::to_dense() const {
    const long din = domain_.size() * k_, dout = codomain_.size() * k_;
    Eigen::MatrixXcd m(dout, din);
    for (long col = 0; col < din; ++col) {
        Field e(domain_, k_, 1);
        e(static_cast<int>(col % k_), 0, col / k_) = 1.0;
        Field y = apply(e);
        for (long p = 0; p < codomain_.size(); ++p)
            for (int r = 0; r < k_; ++r) m(p * k_ + r, col) = y(r, 0, p);
    }
    return m;
}

DiscretizedOperator compose(const DiscretizedOperator& a, const DiscretizedOperator& b) {
    if (!b.codomain().same_as(a.domain()) || a.k() != b.k())
        throw GridMismatchError("operators cannot be composed");
    std::optional<PhaseSymbol> sym;
    if (a.symbol() && b.symbol() && std::holds_alternative<PhasePlaneWave>(*a.symbol()) &&
        std::holds_alternative<PhasePlaneWave>(*b.symbol()))
        sym = symbol_compose(*a.symbol(), *b.symbol());
    return DiscretizedOperator(
        b.domain(), a.codomain(), a.k(), [a, b](const Field& g) { return a.apply(b.apply(g)); },
        [a, b](const Field& h) { return b.apply_adjoint(a.apply_adjoint(h)); }, sym);
}

DiscretizedOperator sum(const DiscretizedOperator& a, const DiscretizedOperator& b) {
    if (!a.domain().same_as(b.domain()) || !a.codomain().same_as(b.codomain()) || a.k() != b.k())
        throw GridMismatchError("operators cannot be added");
    std::optional<PhaseSymbol> sym;
    if (a.symbol() && b.symbol() && std::holds_alternative<PhasePlaneWave>(*a.symbol()) &&
        std::holds_alternative<PhasePlaneWave>(*b.symbol()))
        sym = std::get<PhasePlaneWave>(*a.symbol()) + std::get<PhasePlaneWave>(*b.symbol());
    return DiscretizedOperator(
        a.domain(), a.codomain(), a.k(), [a, b](const Field& g) { return a.apply(g) + b.apply(g); },
        [a, b](const Field& h) { return a.apply_adjoint(h) + b.apply_adjoint(h); }, sym);
}

DiscretizedOperator scaled(const DiscretizedOperator& a, cplx s) {
    std::optional<PhaseSymbol> sym;
    if (a.symbol()) {
        if (auto* p = std::get_if<PhasePlaneWave>(&*a.symbol()))
            sym = p->scaled(s);
        else
            sym = PhaseGrid{std::get<PhaseGrid>(*a.symbol()).n, std::get<PhaseGrid>(*a.symbol()).f * s};
    }
    return DiscretizedOperator(
        a.domain(), a.codomain(), a.k(), [a, s](const Field& g) { return a.apply(g) * s; },
        [a, s](const Field& h) { return a.apply_adjoint(h) * std::conj(s); }, sym);
}

DiscretizedOperator rieffel_operator(const PlaneWaveSymbol& f, const DeformationMatrix& J, const Grid& xg) {
    return DiscretizedOperator::from_symbol(tilde_map(f, J), xg);
}

DiscretizedOperator rieffel_operator(const Field& f, const DeformationMatrix& J) {
    return DiscretizedOperator::from_symbol(tilde_map(f, J), f.grid());
}

double operator_norm(const DiscretizedOperator& a, const NormOptions& opt) {
    // Lanczos on A*A with full reorthogonalization, restarted from the top
    // Ritz vector when the basis reaches kMaxBasis.
    constexpr int kMaxBasis = 120;
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    Field start(a.domain(), a.k(), 1);
    for (auto& z : start.raw()) z = cplx(nd(rng), nd(rng));
    auto dot = [](const Field& x, const Field& y) { return inner_product(x, y)(0, 0); };

    const long dim = a.domain().size() * a.k();
    double prev = -1.0;
    int matvecs = 0;
    while (matvecs < opt.max_iter) {
        double ns = start.l2_norm();
        if (ns == 0.0) return 0.0;
        std::vector<Field> V{start * (1.0 / ns)};
        std::vector<double> alpha, beta;
        Eigen::VectorXd top;
        double lam = 0.0;
        for (;;) {
            Field w = a.apply_adjoint(a.apply(V.back()));
            ++matvecs;
            alpha.push_back(std::real(dot(V.back(), w)));
            for (int pass = 0; pass < 2; ++pass)
                for (const Field& q : V) w -= q * dot(q, w);
            const int m = static_cast<int>(alpha.size());
            Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
            for (int i = 0; i < m; ++i) {
                T(i, i) = alpha[i];
                if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
            lam = es.eigenvalues()(m - 1);
            top = es.eigenvectors().col(m - 1);
            double b = w.l2_norm();
            if (b <= 1e-14 * std::max(std::abs(lam), 1e-300) || m >= dim) return std::sqrt(std::max(lam, 0.0));
            if (prev >= 0.0 && std::abs(lam - prev) <= opt.rel_tol * std::abs(lam))
                return std::sqrt(std::max(lam, 0.0));
            prev = lam;
            if (m >= kMaxBasis || matvecs >= opt.max_iter) break;
            beta.push_back(b);
            V.push_back(w * (1.0 / b));
        }
        start = V[0] * top(0);
        for (size_t i = 1; i < V.size(); ++i) start += V[i] * top(static_cast<long>(i));
    }
    throw NoConvergenceError("Lanczos did not settle in " + std::to_string(opt.max_iter) + " products");
}

double cv_functional(const PhaseSymbol& a, const Grid& xg) {
    const int n = phase_dim(a);
    double best = 0.0;
    for (int bx = 0; bx < (1 << n); ++bx)
        for (int bxi = 0; bxi < (1 << n); ++bxi) {
            MultiIndex ax(n), axi(n);
            for (int i = 0; i < n; ++i) {
                ax[i] = (bx >> i) & 1;
                axi[i] = (bxi >> i) & 1;
            }
            best = std::max(best, phase_sup(derivative(a, ax, axi), xg));
        }
    return best;
}

double cv_ratio(const PhaseSymbol& a, const Grid& xg, const NormOptions& opt) {
    double pi_a = cv_functional(a, xg);
    double norm = operator_norm(DiscretizedOperator::from_symbol(a, xg), opt);
    if (pi_a == 0.0) {
        if (norm > 1e-12) throw DivideByZeroError("pi(a) = 0 but Op(a) is nonzero");
        return 0.0;
    }
    return norm / pi_a;
}

}  // namespace rieffel
