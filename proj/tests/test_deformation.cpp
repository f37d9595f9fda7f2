#include "doctest.h"
#include "helpers.hpp"
#include "rieffel/deformation.hpp"

using namespace rieffel;
using testing::kPi;

namespace {
MatrixElement one(int k) { return MatrixElement::Identity(k, k); }

PlaneWaveSymbol random_wave(int n, double L, int k, int mmax, std::mt19937_64& rng, int terms) {
    std::uniform_int_distribution<int> ud(-mmax, mmax);
    PlaneWaveSymbol f(n, L, k);
    for (int t = 0; t < terms; ++t) {
        std::vector<int> m(n);
        for (auto& v : m) v = ud(rng);
        f.add(m, testing::random_matrix(k, rng, 0.5));
    }
    return f;
}

double sample_diff(const PlaneWaveSymbol& a, const PlaneWaveSymbol& b, const Grid& g) {
    return (a.sample(g) - b.sample(g)).max_abs();
}

double phase_diff(const PhasePlaneWave& a, const PhasePlaneWave& b) {
    double worst = 0.0;
    for (double x : {-1.3, 0.0, 0.7, 2.1})
        for (double xi : {-2.2, -0.4, 0.9, 1.6}) {
            std::vector<double> X(a.n, x), XI(a.n, xi);
            if (a.n == 2) {
                X[1] = 0.5 * x - 0.3;
                XI[1] = -0.7 * xi + 0.2;
            }
            worst = std::max(worst, (a.evaluate(X, XI) - b.evaluate(X, XI)).cwiseAbs().maxCoeff());
        }
    return worst;
}
}  // namespace

TEST_CASE("exact product: J = 0 is the pointwise product") {
    std::mt19937_64 rng(20);
    const double L = 5.0;
    PlaneWaveSymbol f = random_wave(2, L, 2, 3, rng, 6), g = random_wave(2, L, 2, 3, rng, 6);
    PlaneWaveSymbol h = deformed_product_exact(f, g, DeformationMatrix::zero(2));
    Grid gr = Grid::cube(2, 32, L);
    Field fs = f.sample(gr), gs = g.sample(gr), hs = h.sample(gr);
    for (long p = 0; p < gr.size(); p += 13) CHECK((hs.at(p) - fs.at(p) * gs.at(p)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("exact product: scalar phases and unit") {
    const double L = 3.0, theta = 0.37;
    DeformationMatrix J = DeformationMatrix::symplectic(2, theta);
    PlaneWaveSymbol ep = PlaneWaveSymbol::single(L, {1, -2}, one(1));
    PlaneWaveSymbol eq = PlaneWaveSymbol::single(L, {3, 1}, one(1));
    PlaneWaveSymbol r = deformed_product_exact(ep, eq, J);
    REQUIRE(r.terms.size() == 1);
    CHECK(r.terms.begin()->first == std::vector<int>{4, -1});
    double p1 = 1 / (2 * L), p2 = -2 / (2 * L), q1 = 3 / (2 * L), q2 = 1 / (2 * L);
    cplx expect = std::polar(1.0, -2.0 * kPi * theta * (p1 * q2 - p2 * q1));
    CHECK(std::abs(r.terms.begin()->second(0, 0) - expect) < 1e-14);

    // Cross-check against the fast numeric route at high resolution.
    Grid gr = Grid::cube(2, 64, L);
    Field num = twisted_product(ep.sample(gr), eq.sample(gr), J);
    CHECK((num - r.sample(gr)).max_abs() < 1e-10);

    std::mt19937_64 rng(21);
    PlaneWaveSymbol g = random_wave(2, L, 2, 2, rng, 5);
    PlaneWaveSymbol unit = PlaneWaveSymbol::constant(2, L, one(2));
    CHECK(sample_diff(deformed_product_exact(unit, g, J), g, gr) < 1e-14);
    CHECK(sample_diff(deformed_product_exact(g, unit, J), g, gr) < 1e-14);

    CHECK_THROWS_AS(deformed_product_exact(ep, PlaneWaveSymbol::single(L + 1, {0, 0}, one(1)), J), BoxMismatchError);
}

TEST_CASE("exact product: associativity, commutation phase, involution") {
    const double L = 2.0, theta = 0.81;
    DeformationMatrix J = DeformationMatrix::symplectic(2, theta);
    auto e = [&](int a, int b) { return PlaneWaveSymbol::single(L, {a, b}, one(1)); };
    auto pjq = [&](const std::vector<int>& a, const std::vector<int>& b) {
        return theta * (a[0] * b[1] - a[1] * b[0]) / (4.0 * L * L);
    };
    for (int a = -2; a <= 2; a += 2)
        for (int b = -1; b <= 2; ++b)
            for (int c = -2; c <= 1; ++c) {
                std::vector<int> p{a, b}, q{b, c}, r{c, a};
                auto left = deformed_product_exact(deformed_product_exact(e(a, b), e(b, c), J), e(c, a), J);
                auto right = deformed_product_exact(e(a, b), deformed_product_exact(e(b, c), e(c, a), J), J);
                REQUIRE(left.terms.size() == 1);
                REQUIRE(right.terms.size() == 1);
                CHECK(left.terms.begin()->first == right.terms.begin()->first);
                cplx phase = std::polar(1.0, -2.0 * kPi * (pjq(p, q) + pjq(p, r) + pjq(q, r)));
                CHECK(std::abs(left.terms.begin()->second(0, 0) - phase) < 1e-12);
                CHECK(std::abs(right.terms.begin()->second(0, 0) - phase) < 1e-12);

                auto pq = deformed_product_exact(e(a, b), e(b, c), J);
                auto qp = deformed_product_exact(e(b, c), e(a, b), J);
                cplx ratio = pq.terms.begin()->second(0, 0) / qp.terms.begin()->second(0, 0);
                CHECK(std::abs(ratio - std::polar(1.0, -4.0 * kPi * pjq(p, q))) < 1e-12);
            }

    std::mt19937_64 rng(22);
    PlaneWaveSymbol f = random_wave(2, L, 2, 2, rng, 4), g = random_wave(2, L, 2, 2, rng, 4);
    Grid gr = Grid::cube(2, 16, L);
    CHECK(sample_diff(deformed_product_exact(f, g, J).adjoint(),
                      deformed_product_exact(g.adjoint(), f.adjoint(), J), gr) < 1e-13);
}

TEST_CASE("numeric product: J = 0, plane waves, unit") {
    OscIntegralConfig cfg;
    ProductReport rep;
    std::mt19937_64 rng(23);
    Grid g1 = Grid::default_for(1);
    Field a = testing::gaussian(g1, testing::random_matrix(2, rng), 1.0, {0.5});
    Field b = testing::gaussian(g1, testing::random_matrix(2, rng), 0.8, {-0.3});
    Field ab = deformed_product_numeric(a, b, DeformationMatrix::zero(1), cfg, &rep);
    for (long p = 0; p < g1.size(); ++p) CHECK((ab.at(p) - a.at(p) * b.at(p)).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(rep.disagreement < 1e-6);
    CHECK(rep.oracle == "quadrature");

    const double L = 6.0;
    Grid g2 = Grid::default_for(2);
    DeformationMatrix J = DeformationMatrix::symplectic(2, 0.25);
    PlaneWaveSymbol f = random_wave(2, L, 2, 3, rng, 5), g = random_wave(2, L, 2, 3, rng, 5);
    Field fg = deformed_product_numeric(f.sample(g2), g.sample(g2), J, cfg, &rep);
    CHECK((fg - deformed_product_exact(f, g, J).sample(g2)).max_abs() < 1e-8);
    CHECK(rep.oracle == "plane-wave");

    Field gauss = testing::gaussian(g2, testing::random_matrix(2, rng), 0.7);
    Field unit = PlaneWaveSymbol::constant(2, L, one(2)).sample(g2);
    CHECK((deformed_product_numeric(unit, gauss, J, cfg) - gauss).max_abs() < 1e-8);
    CHECK((deformed_product_numeric(gauss, unit, J, cfg) - gauss).max_abs() < 1e-8);

    OscIntegralConfig strict = cfg;
    strict.tol = 1e-30;
    Field g3 = testing::gaussian(g2, one(2), 0.7, {0.4, -0.2});
    CHECK_THROWS_AS(deformed_product_numeric(g3, g3, J, strict), ConvergenceError);

    std::normal_distribution<double> nd;
    Field noise(g2, 2, 2);
    for (auto& z : noise.raw()) z = nd(rng);
    CHECK_THROWS_AS(deformed_product_numeric(noise, g3, J, cfg), DecayViolationError);
}

TEST_CASE("numeric product: Gaussian associativity and involution") {
    std::mt19937_64 rng(24);
    Grid g = Grid::default_for(2);
    DeformationMatrix J = DeformationMatrix::symplectic(2, 0.25);
    OscIntegralConfig cfg;
    ProductReport rep;
    Field f = testing::gaussian(g, testing::random_matrix(2, rng), 0.7, {0.3, -0.2});
    Field h = testing::gaussian(g, testing::random_matrix(2, rng), 0.75, {-0.4, 0.1});
    Field k = testing::gaussian(g, testing::random_matrix(2, rng), 0.7, {0.0, 0.5});
    Field fh = deformed_product_numeric(f, h, J, cfg, &rep);
    CHECK(rep.disagreement < 1e-6);
    Field left = deformed_product_numeric(fh, k, J, cfg);
    Field right = deformed_product_numeric(f, deformed_product_numeric(h, k, J, cfg), J, cfg);
    double scale = f.sup_norm() * h.sup_norm() * k.sup_norm();
    CHECK(std::max(left.sup_norm(), right.sup_norm()) > 1e-3 * scale);
    CHECK((left - right).sup_norm() <= 1e-5 * scale);

    Field lhs = fh.adjoint_pointwise();
    Field rhs = deformed_product_numeric(h.adjoint_pointwise(), f.adjoint_pointwise(), J, cfg);
    CHECK((lhs - rhs).sup_norm() <= 1e-6);
}

TEST_CASE("tilde map") {
    const double L = 4.0;
    std::mt19937_64 rng(25);
    PlaneWaveSymbol f = random_wave(2, L, 2, 3, rng, 4);
    PhasePlaneWave t0 = tilde_map(f, DeformationMatrix::zero(2));
    for (const auto& t : t0.terms) CHECK((t.beta[0] == 0.0 && t.beta[1] == 0.0));

    PhasePlaneWave tc = tilde_map(PlaneWaveSymbol::constant(2, L, one(2)), DeformationMatrix::symplectic(2, 1.0));
    REQUIRE(tc.terms.size() == 1);
    CHECK((tc.terms[0].alpha == std::vector<double>{0.0, 0.0}));
    CHECK((tc.terms[0].beta == std::vector<double>{0.0, 0.0}));

    const double theta = 0.6;
    DeformationMatrix J = DeformationMatrix::symplectic(2, theta);
    PlaneWaveSymbol ep = PlaneWaveSymbol::single(L, {2, -1}, one(1));
    PhasePlaneWave te = tilde_map(ep, J);
    double p1 = 2 / (2 * L), p2 = -1 / (2 * L);
    // beta = -J^T p = J p = theta (p2, -p1)
    CHECK(te.terms[0].beta[0] == doctest::Approx(theta * p2));
    CHECK(te.terms[0].beta[1] == doctest::Approx(-theta * p1));

    // Against f(x - J xi / 2 pi) sampled directly.
    Grid xg = Grid::cube(2, 8, L);
    PhaseGrid pg = PhaseGrid::sample(tilde_map(f, J), xg);
    Grid dg = xg.dual();
    double worst = 0.0;
    for (long i = 0; i < xg.size(); i += 3)
        for (long j = 0; j < dg.size(); j += 5) {
            auto x = xg.point(i), xi = dg.point(j);
            Eigen::VectorXd v(2);
            v << xi[0], xi[1];
            Eigen::VectorXd s = J.J * v / (2.0 * kPi);
            MatrixElement direct = f.evaluate({x[0] - s(0), x[1] - s(1)});
            worst = std::max(worst, (pg.f.at(i * dg.size() + j) - direct).cwiseAbs().maxCoeff());
        }
    CHECK(worst < 1e-12);

    Field fg = f.sample(Grid::cube(2, 16, L));
    CHECK(phase_diff(tilde_map(fg, J), tilde_map(f, J)) < 1e-12);
}

TEST_CASE("regularized oscillatory integral") {
    OscIntegralConfig cfg;
    for (auto [p, q] : std::vector<std::pair<double, double>>{{0, 0}, {1, 0.5}, {2, -1.5}, {-0.3, 2.2}, {3, 3}})
        CHECK(std::abs(oscillatory_phase({p}, {q}, cfg) - std::polar(1.0, p * q)) < 1e-6);
    CHECK(std::abs(oscillatory_phase({0.4, -1.0}, {1.2, 0.3}, cfg) - std::polar(1.0, 0.48 - 0.3)) < 1e-6);
    OscIntegralConfig bad = cfg;
    bad.N_reg = 1;
    bad.M_reg = 1;
    CHECK_THROWS_AS(oscillatory_phase({0.0, 0.0}, {0.0, 0.0}, bad), InvalidInputError);
    CHECK_NOTHROW(oscillatory_phase({0.0}, {0.0}, bad));
}

TEST_CASE("symbol involution") {
    OscIntegralConfig cfg;
    const double L = 4.0;
    std::mt19937_64 rng(26);
    PlaneWaveSymbol f = random_wave(1, L, 2, 3, rng, 4);
    PhasePlaneWave a = PhasePlaneWave::from_x_symbol(f);
    PhasePlaneWave ad = symbol_dagger(a, cfg);
    CHECK(phase_diff(ad, PhasePlaneWave::from_x_symbol(f.adjoint())) < 1e-12);
    // The eta-integral collapses: each x-frequency carries phase 1.
    for (const auto& t : a.terms) CHECK(std::abs(oscillatory_phase(t.alpha, {0.0}, cfg) - 1.0) < 1e-6);

    MatrixElement c = testing::random_matrix(2, rng);
    PhasePlaneWave cd = symbol_dagger(PhasePlaneWave::constant(1, c), cfg);
    CHECK((cd.evaluate({0.3}, {-0.2}) - c.adjoint()).cwiseAbs().maxCoeff() < 1e-15);

    PhasePlaneWave b = PhasePlaneWave::from_plane_wave(random_wave(2, L, 2, 2, rng, 5));
    CHECK(phase_diff(symbol_dagger(symbol_dagger(b, cfg), cfg), b) < 1e-12);
    // Each dagger phase agrees with the regularized integral.
    for (const auto& t : b.terms)
        CHECK(std::abs(oscillatory_phase(t.alpha, t.beta, cfg) - std::polar(1.0, t.alpha[0] * t.beta[0])) < 1e-6);

    // Grid route against the plane-wave route on lattice frequencies.
    Grid xg = Grid::cube(1, 32, L);
    double dxi = kPi / L, dx = kPi / xg.dual().L[0];
    PhasePlaneWave lat(1, 2);
    lat.add({dxi * 2}, {dx * 1}, testing::random_matrix(2, rng));
    lat.add({-dxi * 1}, {dx * 3}, testing::random_matrix(2, rng));
    lat.add({0.0}, {-dx * 2}, testing::random_matrix(2, rng));
    PhaseGrid gd = symbol_dagger(PhaseGrid::sample(lat, xg), cfg);
    PhaseGrid od = PhaseGrid::sample(symbol_dagger(lat, cfg), xg);
    CHECK((gd.f - od.f).max_abs() < 1e-12);
    PhaseGrid gdd = symbol_dagger(gd, cfg);
    CHECK((gdd.f - PhaseGrid::sample(lat, xg).f).max_abs() < 1e-12);
}

TEST_CASE("symbol composition") {
    OscIntegralConfig cfg;
    const double L = 4.0;
    std::mt19937_64 rng(27);
    PhasePlaneWave a = PhasePlaneWave::from_plane_wave(random_wave(2, L, 2, 2, rng, 4));
    PhasePlaneWave unit = PhasePlaneWave::constant(1, one(2));
    CHECK(phase_diff(symbol_compose(a, unit, cfg), a) < 1e-12);
    CHECK(phase_diff(symbol_compose(unit, a, cfg), a) < 1e-12);

    // x-independent multipliers: pointwise product in xi.
    PhasePlaneWave m1(1, 2), m2(1, 2);
    m1.add({0.0}, {0.7}, testing::random_matrix(2, rng));
    m1.add({0.0}, {-0.2}, testing::random_matrix(2, rng));
    m2.add({0.0}, {1.1}, testing::random_matrix(2, rng));
    PhasePlaneWave m12 = symbol_compose(m1, m2, cfg);
    for (double xi : {-1.0, 0.3, 2.0})
        CHECK((m12.evaluate({0.5}, {xi}) - m1.evaluate({0.0}, {xi}) * m2.evaluate({0.0}, {xi})).cwiseAbs().maxCoeff() <
              1e-13);
    for (const auto& t : m1.terms) CHECK(std::abs(oscillatory_phase({0.0}, t.beta, cfg) - 1.0) < 1e-6);

    // f~ x g~ = (f x_J g)~
    const double Lb = 5.0;
    DeformationMatrix J = DeformationMatrix::symplectic(2, 0.7);
    PlaneWaveSymbol f = random_wave(2, Lb, 2, 2, rng, 3), g = random_wave(2, Lb, 2, 2, rng, 3);
    PhasePlaneWave lhs = symbol_compose(tilde_map(f, J), tilde_map(g, J), cfg);
    PhasePlaneWave rhs = tilde_map(deformed_product_exact(f, g, J), J);
    CHECK(phase_diff(lhs, rhs) < 1e-6);

    // Grid route against the plane-wave route on lattice frequencies.
    Grid xg = Grid::cube(1, 32, L);
    double dxi = kPi / L, dx = kPi / xg.dual().L[0];
    PhasePlaneWave p(1, 2), q(1, 2);
    p.add({dxi * 1}, {dx * 2}, testing::random_matrix(2, rng));
    p.add({-dxi * 2}, {-dx * 1}, testing::random_matrix(2, rng));
    q.add({dxi * 3}, {0.0}, testing::random_matrix(2, rng));
    q.add({-dxi * 1}, {dx * 2}, testing::random_matrix(2, rng));
    PhaseGrid gc = symbol_compose(PhaseGrid::sample(p, xg), PhaseGrid::sample(q, xg), cfg);
    PhaseGrid oc = PhaseGrid::sample(symbol_compose(p, q, cfg), xg);
    CHECK((gc.f - oc.f).max_abs() < 1e-11);

    // Associativity.
    PhasePlaneWave r = PhasePlaneWave::from_plane_wave(random_wave(2, L, 2, 1, rng, 3));
    CHECK(phase_diff(symbol_compose(symbol_compose(a, a, cfg), r, cfg),
                     symbol_compose(a, symbol_compose(a, r, cfg), cfg)) < 1e-11);
}

TEST_CASE("generalized Fourier inversion") {
    OscIntegralConfig cfg;
    std::mt19937_64 rng(28);
    MatrixElement c = testing::random_matrix(2, rng);
    for (double x : {-1.0, 0.0, 0.5, 1.7, 3.0}) {
        CHECK(fourier_inversion_check(PlaneWaveSymbol::constant(1, 4.0, c), {x}, cfg) <= 1e-8);
        CHECK(fourier_inversion_check(PlaneWaveSymbol::single(4.0, {3}, c), {x}, cfg) <= 1e-6);
        CHECK(fourier_inversion_check(PlaneWaveSymbol::single(4.0, {2, -1}, c), {x, -0.5 * x}, cfg) <= 1e-6);
    }
    Grid g = Grid::default_for(1);
    Field gauss = testing::gaussian(g, c, 1.0);
    CHECK(fourier_inversion_check(gauss, {0.0}, cfg) <= 1e-6);
    CHECK(fourier_inversion_check(gauss, {0.75}, cfg) <= 1e-6);
    Field konst = PlaneWaveSymbol::constant(1, g.L[0], c).sample(g);
    CHECK(fourier_inversion_check(konst, {0.25}, cfg) <= 1e-8);
}
