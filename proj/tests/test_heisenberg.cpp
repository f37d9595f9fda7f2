#include "doctest.h"
#include "helpers.hpp"
#include "rieffel/heisenberg.hpp"
#include "rieffel/quadrature.hpp"

using namespace rieffel;
using testing::kPi;

namespace {
Field random_vector(const Grid& g, int k, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    Field v(g, k, 1);
    for (auto& z : v.raw()) z = cplx(nd(rng), nd(rng));
    return v;
}

double rel_diff(const Field& a, const Field& b) { return (a - b).l2_norm() / b.l2_norm(); }

// Plane-wave symbol with lattice frequencies on xg.
PhasePlaneWave lattice_symbol(const Grid& xg, int k, std::mt19937_64& rng, int terms, int mmax) {
    std::uniform_int_distribution<int> ud(-mmax, mmax);
    PhasePlaneWave a(xg.n, k);
    Grid dg = xg.dual();
    for (int t = 0; t < terms; ++t) {
        std::vector<double> al(xg.n), be(xg.n);
        for (int i = 0; i < xg.n; ++i) {
            al[i] = kPi / xg.L[i] * ud(rng);
            be[i] = kPi / dg.L[i] * ud(rng);
        }
        a.add(al, be, testing::random_matrix(k, rng, 0.5));
    }
    return a;
}
}  // namespace

TEST_CASE("Heisenberg group law") {
    HeisenbergElement h1{{0.5, -1.0}, {2.0, 0.3}, 0.1}, h2{{1.5, 0.2}, {-0.7, 1.1}, -0.4};
    HeisenbergElement p = h1 * h2;
    CHECK(p.c == doctest::Approx(0.1 - 0.4 + 0.5 * -0.7 + -1.0 * 1.1));
    HeisenbergElement e = h1 * h1.inverse();
    for (double v : e.a) CHECK(v == 0.0);
    for (double v : e.b) CHECK(v == 0.0);
    CHECK(std::abs(e.c) < 1e-15);
    HeisenbergElement h3{{0.0, 1.0}, {1.0, 0.0}, 2.0};
    HeisenbergElement l = (h1 * h2) * h3, r = h1 * (h2 * h3);
    CHECK(l.c == doctest::Approx(r.c));
}

TEST_CASE("U is a unitary representation") {
    std::mt19937_64 rng(60);
    Grid g = Grid::cube(1, 64, 5.0);
    Field f = random_vector(g, 2, rng);
    CHECK((heisenberg_act(HeisenbergElement::identity(1), f) - f).max_abs() == 0.0);
    CHECK((heisenberg_act({{0.0}, {0.0}, kPi}, f) + f).max_abs() < 1e-15);

    std::uniform_real_distribution<double> ur(-3.0, 3.0);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        HeisenbergElement h{{ur(rng)}, {ur(rng)}, ur(rng)};
        Field u = random_vector(g, 2, rng), v = random_vector(g, 2, rng);
        MatrixElement a = inner_product(heisenberg_act(h, u), heisenberg_act(h, v)), b = inner_product(u, v);
        worst = std::max(worst, (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff());
    }
    CHECK(worst < 1e-10);

    // Group law on lattice parameters, where the discrete action is exact.
    const double dx = g.spacing(0), db = kPi / g.L[0];
    for (int t = 0; t < 10; ++t) {
        std::uniform_int_distribution<int> ui(-6, 6);
        HeisenbergElement h1{{dx * ui(rng)}, {db * ui(rng)}, ur(rng)}, h2{{dx * ui(rng)}, {db * ui(rng)}, ur(rng)};
        Field lhs = heisenberg_act(h1, heisenberg_act(h2, f));
        Field rhs = heisenberg_act(h1 * h2, f);
        CHECK((lhs - rhs).max_abs() < 1e-10);
    }
    // On smooth decaying f the law holds off-lattice too.
    Field gs = testing::gaussian(g, testing::random_matrix(2, rng), 0.6);
    HeisenbergElement h1{{0.37}, {1.21}, 0.3}, h2{{-0.55}, {0.4}, 1.0};
    CHECK((heisenberg_act(h1, heisenberg_act(h2, gs)) - heisenberg_act(h1 * h2, gs)).max_abs() < 1e-8);
}

TEST_CASE("Ad U") {
    std::mt19937_64 rng(61);
    Grid g = Grid::cube(1, 16, 3.0);
    PhasePlaneWave s = lattice_symbol(g, 2, rng, 3, 2);
    DiscretizedOperator A = DiscretizedOperator::from_symbol(s, g);
    Eigen::MatrixXcd m = A.to_dense();
    CHECK((adu_conjugate({0.0}, {0.0}, A).to_dense() - m).cwiseAbs().maxCoeff() < 1e-12);
    DiscretizedOperator I = DiscretizedOperator::identity(g, 2);
    CHECK((adu_conjugate({0.7}, {-1.3}, I).to_dense() - I.to_dense()).cwiseAbs().maxCoeff() < 1e-12);

    DiscretizedOperator C = adu_conjugate({0.41}, {-0.9}, A);
    CHECK((adu_conjugate({0.41}, {-0.9}, A.adjoint()).to_dense() - C.to_dense().adjoint()).cwiseAbs().maxCoeff() <
          1e-10);
    CHECK(operator_norm(C) == doctest::Approx(operator_norm(A)).epsilon(1e-8));

    // Lattice parameters: Ad U shifts the symbol exactly.
    const double a = 2 * g.spacing(0), b = -3 * kPi / g.L[0];
    DiscretizedOperator shifted = DiscretizedOperator::from_symbol(adu_symbol({a}, {b}, s), g);
    CHECK((adu_conjugate({a}, {b}, A).to_dense() - shifted.to_dense()).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("derivative identity for the conjugated family") {
    std::mt19937_64 rng(62);
    Grid g = Grid::cube(1, 64, 6.0);
    PhasePlaneWave s = lattice_symbol(g, 2, rng, 4, 2);
    DiscretizedOperator A = DiscretizedOperator::from_symbol(s, g);
    Field h = testing::gaussian(g, testing::random_matrix(2, rng), 0.9, {0.3});
    const std::vector<double> a0{3 * g.spacing(0)}, b0{-2 * kPi / g.L[0]};
    DiscretizedOperator family = adu_conjugate(a0, b0, A);
    for (auto [ax, axi] : std::vector<std::pair<int, int>>{{1, 0}, {0, 1}, {1, 1}, {2, 0}}) {
        DiscretizedOperator fd = delta(family, {ax, axi}, DeltaRoute::FiniteDifference, 1e-2);
        PhasePlaneWave d = s.derivative({ax}, {axi});
        if ((ax + axi) % 2) d = d.scaled(-1.0);
        DiscretizedOperator exact = adu_conjugate(a0, b0, DiscretizedOperator::from_symbol(d, g));
        CHECK(rel_diff(fd.apply(h), exact.apply(h)) < 1e-4);
    }
}

TEST_CASE("two generator routes agree") {
    std::mt19937_64 rng(63);
    for (int n : {1, 2}) {
        Grid g = n == 1 ? Grid::cube(1, 64, 6.0) : Grid::cube(2, 32, 5.0);
        PhasePlaneWave s = lattice_symbol(g, 1, rng, 3, 2);
        DiscretizedOperator A = DiscretizedOperator::from_symbol(s, g);
        Field h = testing::gaussian(g, MatrixElement::Constant(1, 1, 1.0), 0.8);
        for (int k = 1; k <= 2; ++k)
            for (const auto& alpha : multi_indices(2 * n, k)) {
                Field x = delta(A, alpha, DeltaRoute::FiniteDifference, 1e-2).apply(h);
                Field y = delta(A, alpha, DeltaRoute::Symbol).apply(h);
                if (y.l2_norm() > 1e-12) CHECK(rel_diff(x, y) < 1e-3);
            }
    }
    Grid g = Grid::cube(1, 16, 2.0);
    DiscretizedOperator plain = DiscretizedOperator::dense(Eigen::MatrixXcd::Identity(16, 16), g, 1);
    CHECK_THROWS_AS(delta(plain, {1, 0}, DeltaRoute::Symbol), UnsupportedOperatorError);
    CHECK_THROWS_AS(delta(plain, {5, 0}, DeltaRoute::FiniteDifference), OrderTooHighError);
    CHECK_THROWS_AS(delta(plain, {1}, DeltaRoute::FiniteDifference), InvalidInputError);
}

TEST_CASE("rho_m") {
    Grid g = Grid::cube(1, 64, 6.0);
    MatrixElement c(2, 2);
    c << 1.0, 2.0, 0.0, cplx(0, 1);
    DiscretizedOperator K = DiscretizedOperator::from_symbol(PhasePlaneWave::constant(1, c), g);
    CHECK(rho_m(K, 0) == doctest::Approx(cstar_norm(c)).epsilon(1e-8));
    CHECK(rho_m(K, 2) == doctest::Approx(cstar_norm(c)).epsilon(1e-8));  // delta_0 = I enters the max
    CHECK(operator_norm(delta(K, {1, 0})) == 0.0);
    CHECK(operator_norm(delta(K, {1, 1})) == 0.0);

    // L_{e_p}, n = 2: delta^alpha is a unitary times (2 pi p, J p)^alpha.
    Grid g2 = Grid::cube(2, 32, 5.0);
    const double theta = 0.8;
    DeformationMatrix J = DeformationMatrix::symplectic(2, theta);
    PlaneWaveSymbol ep = PlaneWaveSymbol::single(5.0, {2, -1}, MatrixElement::Constant(1, 1, 1.0));
    DiscretizedOperator L = rieffel_operator(ep, J, g2);
    const double p1 = 2 / 10.0, p2 = -1 / 10.0;
    std::vector<double> w{2 * kPi * p1, 2 * kPi * p2, theta * p2, -theta * p1};
    double expect1 = 1.0;
    for (double v : w) expect1 = std::max(expect1, std::abs(v));
    CHECK(rho_m(L, 0) == doctest::Approx(1.0).epsilon(1e-8));
    double r1 = rho_m(L, 1);
    CHECK(r1 == doctest::Approx(expect1).epsilon(1e-8));
    // J p on the dual lattice (spacing 2L/N) keeps the discrete Ad U exact for both routes.
    const double theta_lat = 2.0 * 5.0 / 32.0 * 10.0;
    DiscretizedOperator Llat = rieffel_operator(ep, DeformationMatrix::symplectic(2, theta_lat), g2);
    double rs = rho_m(Llat, 1, DeltaRoute::Symbol), rf = rho_m(Llat, 1, DeltaRoute::FiniteDifference);
    CHECK(std::abs(rf - rs) <= 1e-3 * rs);
    CHECK(rho_m(L, 0) == operator_norm(L));
    CHECK_THROWS_AS(rho_m(L, 9), OrderTooHighError);
}

TEST_CASE("differential norms") {
    Grid g = Grid::cube(2, 32, 5.0);
    DeformationMatrix J = DeformationMatrix::symplectic(2, 0.5);
    MatrixElement c = MatrixElement::Identity(2, 2) * 3.0;
    DifferentialNormReport rc = differential_norms(rieffel_operator(PlaneWaveSymbol::constant(2, 5.0, c), J, g), 2);
    REQUIRE(rc.T.size() == 3);
    CHECK(rc.T[0] == doctest::Approx(3.0));
    CHECK(rc.T[1] == 0.0);
    CHECK(rc.T[2] == 0.0);

    auto e = [](int a, int b) { return PlaneWaveSymbol::single(5.0, {a, b}, MatrixElement::Constant(1, 1, 1.0)); };
    std::vector<std::pair<PlaneWaveSymbol, PlaneWaveSymbol>> pairs{{e(1, 0), e(0, 1)}, {e(2, -1), e(-1, 3)},
                                                                   {e(-2, 2), e(1, 1)}};
    for (const auto& [f, h] : pairs) {
        DiscretizedOperator Lf = rieffel_operator(f, J, g), Lh = rieffel_operator(h, J, g);
        DiscretizedOperator Lfh = rieffel_operator(deformed_product_exact(f, h, J), J, g);
        auto a = differential_norms(Lf, 2), b = differential_norms(Lh, 2), ab = differential_norms(Lfh, 2);
        CHECK(a.T[0] == operator_norm(Lf));
        for (int m = 0; m <= 2; ++m) {
            CHECK(ab.s[m] <= a.s[m] * b.s[m] + 1e-6);
            double leib = 0.0;
            for (int i = 0; i <= m; ++i) leib += a.T[i] * b.T[m - i];
            CHECK(ab.T[m] <= leib + 1e-6);
            if (m > 0) CHECK(a.s[m] >= a.s[m - 1]);
        }
        // T_1 of a single wave: sum of |(2 pi p, J p)| components.
        double p1 = f.terms.begin()->first[0] / 10.0, p2 = f.terms.begin()->first[1] / 10.0;
        double t1 = 2 * kPi * (std::abs(p1) + std::abs(p2)) + 0.5 * (std::abs(p2) + std::abs(p1));
        CHECK(a.T[1] == doctest::Approx(t1).epsilon(1e-8));
    }
    CHECK_THROWS_AS(differential_norms(rieffel_operator(e(1, 0), J, g), 9), OrderTooHighError);
}

TEST_CASE("gamma kernels") {
    CHECK(gamma1(0.0) == 1.0);
    CHECK(gamma1(-1.0) == 0.0);
    CHECK(gamma2(1.0) == doctest::Approx(std::exp(-1.0)));
    CHECK(gamma2(-0.5) == 0.0);
    QuadRule q = composite_gauss(20, 20, 0.0, 60.0);
    double s = 0.0;
    for (size_t i = 0; i < q.x.size(); ++i) s += q.w[i] * gamma2(q.x[i]);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("D and its inverse") {
    PhasePlaneWave zero(1, 2);
    CHECK(std::get<PhasePlaneWave>(d_inverse(zero)).terms.empty());
    std::mt19937_64 rng(64);
    MatrixElement c = testing::random_matrix(2, rng);
    PhasePlaneWave kc = std::get<PhasePlaneWave>(d_inverse(PhasePlaneWave::constant(1, c)));
    CHECK((kc.evaluate({0.3}, {-1.0}) - c).cwiseAbs().maxCoeff() < 1e-9);

    const double L = 4.0;
    for (int t = 0; t < 5; ++t) {
        Grid xg = Grid::cube(1, 32, L);
        PhasePlaneWave b(1, 2);
        std::uniform_int_distribution<int> ud(-4, 4);
        for (int j = 0; j < 3; ++j)
            b.add({kPi / L * ud(rng)}, {kPi / xg.dual().L[0] * ud(rng)}, testing::random_matrix(2, rng));
        PhasePlaneWave a = std::get<PhasePlaneWave>(d_inverse(b));
        // closed form: each wave divided by (1 + i alpha)^2 (1 + i beta)^2
        for (size_t j = 0; j < b.terms.size(); ++j) {
            cplx za(1.0, b.terms[j].alpha[0]), zb(1.0, b.terms[j].beta[0]);
            CHECK((a.terms[j].c - b.terms[j].c / (za * za * zb * zb)).cwiseAbs().maxCoeff() < 1e-9);
        }
        PhasePlaneWave back = std::get<PhasePlaneWave>(d_apply(a));
        double worst = 0.0;
        for (double x : {-2.0, 0.1, 1.7})
            for (double xi : {-3.0, 0.0, 2.2})
                worst = std::max(worst, (back.evaluate({x}, {xi}) - b.evaluate({x}, {xi})).cwiseAbs().maxCoeff());
        CHECK(worst <= 1e-6);

        PhaseGrid bg = PhaseGrid::sample(b, xg);
        PhaseGrid rg = std::get<PhaseGrid>(d_apply(d_inverse(bg)));
        CHECK((rg.f - bg.f).sup_norm() <= 1e-6);
        CHECK((std::get<PhaseGrid>(d_apply(bg)).f - PhaseGrid::sample(std::get<PhasePlaneWave>(d_apply(b)), xg).f)
                  .max_abs() < 1e-9);
    }
    CHECK_THROWS_AS(d_apply(PhasePlaneWave(2, 1)), InvalidInputError);
}

TEST_CASE("kernel identity") {
    CHECK(kernel_identity_residual(1.0, 1.0) <= 1e-10);
    CHECK(kernel_identity_residual(0.0, -1.0) <= 1e-10);
    CHECK(kernel_identity_residual(-1.0, -1.0) <= 1e-6);
    cplx closed = gamma2(1.0) * gamma2(1.0) * std::polar(1.0, -1.0);
    CHECK(std::abs(closed - std::exp(-2.0) * std::polar(1.0, -1.0)) < 1e-15);
    for (double s = -3.0; s <= 0.0; s += 0.75)
        for (double t = -3.0; t <= 0.0; t += 0.75) CHECK(kernel_identity_residual(s, t) <= 1e-6);

    // |v|_2 by quadrature: int dt / |1 + it|^4 * int_0^inf e^{-2r} dr
    QuadRule q = composite_gauss(40, 32, -400.0, 400.0);
    double acc = 0.0;
    for (size_t i = 0; i < q.x.size(); ++i) acc += q.w[i] / std::pow(1 + q.x[i] * q.x[i], 2);
    CHECK(kernel_v_norm() == doctest::Approx(std::sqrt(acc * 0.5)).epsilon(1e-6));
    CHECK(kernel_u_norm() > 0.0);
    CHECK(std::isfinite(kernel_u_norm()));
}

TEST_CASE("symbol map S inverts Op") {
    SymbolMapSpec spec;
    Grid g = spec.grid();
    CHECK(g.dual().L[0] == doctest::Approx(g.L[0]));
    SymbolMapReport rep;

    PhaseGrid z = symbol_map_S(DiscretizedOperator::from_symbol(PhasePlaneWave(1, 1), g), spec, &rep);
    CHECK(z.f.max_abs() == 0.0);

    MatrixElement c = MatrixElement::Constant(1, 1, cplx(1.5, -0.5));
    PhaseGrid sc = symbol_map_S(DiscretizedOperator::from_symbol(PhasePlaneWave::constant(1, c), g), spec, &rep);
    CHECK((sc.f - PhaseGrid::sample(PhasePlaneWave::constant(1, c), g).f).sup_norm() <= 0.05 * std::abs(c(0, 0)));
    CHECK(rep.symbol_route);
    CHECK(rep.route_disagreement < 1e-3);

    std::mt19937_64 rng(65);
    PhasePlaneWave a = lattice_symbol(g, 1, rng, 3, 2);
    PhaseGrid sa = symbol_map_S(DiscretizedOperator::from_symbol(a, g), spec, &rep);
    PhaseGrid ref = PhaseGrid::sample(a, g);
    CHECK((sa.f - ref.f).sup_norm() <= 0.05 * ref.f.sup_norm());

    // Without a symbol only the finite-difference route runs.
    DiscretizedOperator A = DiscretizedOperator::from_symbol(a, g);
    DiscretizedOperator bare(g, g, 1, [A](const Field& v) { return A.apply(v); },
                             [A](const Field& v) { return A.apply_adjoint(v); });
    PhaseGrid sb = symbol_map_S(bare, spec, &rep);
    CHECK_FALSE(rep.symbol_route);
    CHECK((sb.f - ref.f).sup_norm() <= 0.05 * ref.f.sup_norm());

    CHECK_THROWS_AS(symbol_map_S(DiscretizedOperator::identity(Grid::cube(1, 64, 3.0), 1), spec), GridMismatchError);
}

TEST_CASE("inverse Calderon-Vaillancourt bound") {
    SymbolMapSpec spec;
    auto z = inverse_cv_bound(PhasePlaneWave(1, 1), spec);
    CHECK(z.first == 0.0);
    CHECK(z.second == 0.0);
    MatrixElement c = MatrixElement::Constant(1, 1, 2.0);
    auto k = inverse_cv_bound(PhasePlaneWave::constant(1, c), spec);
    CHECK(k.first == doctest::Approx(2.0));
    CHECK(k.second >= 2.0);
    std::mt19937_64 rng(66);
    PhasePlaneWave a = lattice_symbol(spec.grid(), 1, rng, 2, 2);
    auto w = inverse_cv_bound(a, spec);
    CHECK(w.first <= w.second * 1.05);
}
