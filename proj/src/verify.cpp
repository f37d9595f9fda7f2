#include "rieffel/verify.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "rieffel/heisenberg.hpp"

namespace rieffel {

namespace {

constexpr double kPi = std::numbers::pi;

std::string trim(const std::string& s) {
    const char* ws = " \t\r\n";
    size_t b = s.find_first_not_of(ws);
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

double to_double(const std::string& s) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
        throw ParseError("not a finite number: '" + s + "'");
    return v;
}

long to_long(const std::string& s) {
    long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw ParseError("not an integer: '" + s + "'");
    return v;
}

bool to_bool(const std::string& s) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ParseError("not a boolean: '" + s + "'");
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string short_fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

// ---------------------------------------------------------------- random families

MatrixElement random_matrix(int k, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> nd(0.0, scale);
    MatrixElement m(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) m(i, j) = cplx(nd(rng), nd(rng));
    return m;
}

MatrixElement random_hermitian(int k, std::mt19937_64& rng, double scale = 1.0) {
    MatrixElement m = random_matrix(k, rng, scale);
    return 0.5 * (m + m.adjoint());
}

Field gaussian(const Grid& g, const MatrixElement& c, double s, const std::vector<double>& center) {
    return sample(g, c.rows(), c.cols(), [&](const std::vector<double>& x) {
        double r2 = 0.0;
        for (size_t a = 0; a < x.size(); ++a) r2 += (x[a] - center[a]) * (x[a] - center[a]);
        return MatrixElement(std::exp(-r2 / (2.0 * s * s)) * c);
    });
}

std::vector<double> random_center(int n, std::mt19937_64& rng, double r) {
    std::uniform_real_distribution<double> ud(-r, r);
    std::vector<double> c(n);
    for (auto& v : c) v = ud(rng);
    return c;
}

PlaneWaveSymbol random_wave(int n, double L, int k, int mmax, std::mt19937_64& rng, int terms) {
    std::uniform_int_distribution<int> ud(-mmax, mmax);
    PlaneWaveSymbol f(n, L, k);
    for (int t = 0; t < terms; ++t) {
        std::vector<int> m(n);
        for (auto& v : m) v = ud(rng);
        f.add(m, random_matrix(k, rng, 0.5));
    }
    return f;
}

// Frequencies on the lattice of xg and its dual; mask picks x (1), xi (2) or both (3).
// nonzero skips the zero frequency on the selected axes.
PhasePlaneWave lattice_symbol(const Grid& xg, int k, std::mt19937_64& rng, int terms, int mmax, int mask = 3,
                              bool nonzero = false) {
    std::uniform_int_distribution<int> ud(-mmax, mmax);
    auto draw = [&] {
        int v = ud(rng);
        while (nonzero && v == 0) v = ud(rng);
        return v;
    };
    PhasePlaneWave a(xg.n, k);
    Grid dg = xg.dual();
    for (int t = 0; t < terms; ++t) {
        std::vector<double> al(xg.n, 0.0), be(xg.n, 0.0);
        for (int i = 0; i < xg.n; ++i) {
            if (mask & 1) al[i] = kPi / xg.L[i] * draw();
            if (mask & 2) be[i] = kPi / dg.L[i] * draw();
        }
        a.add(al, be, random_matrix(k, rng, 0.5));
    }
    return a;
}

std::vector<std::vector<int>> integer_box(int n, int mmax) {
    std::vector<std::vector<int>> out;
    std::vector<int> m(n, -mmax);
    for (;;) {
        out.push_back(m);
        int a = n - 1;
        while (a >= 0 && m[a] == mmax) m[a--] = -mmax;
        if (a < 0) return out;
        ++m[a];
    }
}

double phase_diff(const PhasePlaneWave& a, const PhasePlaneWave& b, const Grid& xg) {
    return phase_sup(a + b.scaled(-1.0), xg);
}

// ---------------------------------------------------------------- suites

struct Recorder {
    SuiteReport& rep;
    const RunConfig& cfg;
    std::string anchor;

    void check(const std::string& claim, double measured, double bound, const std::string& note = "") {
        CheckRecord r;
        r.claim = rep.suite + "/" + claim;
        r.anchor = anchor;
        r.measured = measured;
        r.bound = bound;
        r.pass = std::isfinite(measured) && measured <= bound;
        r.note = note;
        rep.checks.push_back(std::move(r));
    }
    double tol(const std::string& key, double fallback) const { return cfg.tolerance(key, fallback); }
    std::mt19937_64 rng(int salt) const { return std::mt19937_64(cfg.seed + 0x9E3779B97F4A7C15ULL * salt); }
};

std::string theta_tag(double theta) { return "theta=" + short_fmt(theta); }

void suite_plane_wave(Recorder& r) {
    const RunConfig& cfg = r.cfg;
    const Grid g = cfg.grid();
    const int n = cfg.n;
    const double L = g.L[0];
    const double tol = r.tol("plane_wave", 1e-6);
    const auto box = integer_box(n, 3);
    const MatrixElement one = MatrixElement::Identity(1, 1);
    std::vector<Field> waves;
    for (const auto& m : box) waves.push_back(PlaneWaveSymbol::single(L, m, one).sample(g));
    for (double theta : cfg.thetas) {
        DeformationMatrix J = cfg.J(theta);
        double worst = 0.0;
        for (size_t i = 0; i < box.size(); ++i)
            for (size_t j = 0; j < box.size(); ++j) {
                Field num = deformed_product_numeric(waves[i], waves[j], J);
                Eigen::VectorXd p(n), q(n);
                for (int a = 0; a < n; ++a) {
                    p(a) = box[i][a] / (2.0 * L);
                    q(a) = box[j][a] / (2.0 * L);
                }
                const cplx phase = std::polar(1.0, -2.0 * kPi * p.dot(J.J * q));
                Field oracle = sample(g, 1, 1, [&](const std::vector<double>& x) {
                    double s = 0.0;
                    for (int a = 0; a < n; ++a) s += (p(a) + q(a)) * x[a];
                    return MatrixElement(MatrixElement::Constant(1, 1, phase * std::polar(1.0, 2.0 * kPi * s)));
                });
                worst = std::max(worst, (num - oracle).max_abs());
            }
        r.check(theta_tag(theta), worst, tol, std::to_string(box.size() * box.size()) + " frequency pairs");
    }
}

void suite_sup_op(Recorder& r) {
    const RunConfig& cfg = r.cfg;
    const Grid g = cfg.grid();
    auto rng = r.rng(2);
    const double tol = r.tol("sup_op", 0.02);
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
        PlaneWaveSymbol f = random_wave(cfg.n, g.L[0], cfg.k, 3, rng, 4);
        Field fs = f.sample(g);
        if (!is_band_limited(fs)) throw DecayViolationError("sup_op family member is not band-limited");
        const double sup = fs.sup_norm();
        const double op = operator_norm(rieffel_operator(f, DeformationMatrix::zero(cfg.n), g));
        worst = std::max(worst, std::abs(sup - op) / sup);
    }
    r.check("relative_gap", worst, tol, "20 symbols, J = 0");
}

void suite_associativity(Recorder& r) {
    const RunConfig& cfg = r.cfg;
    const int n = cfg.n;
    const Grid g = cfg.grid();
    const double L = g.L[0];
    const auto box = integer_box(n, 2);
    const MatrixElement one = MatrixElement::Identity(1, 1);
    const double exact_tol = r.tol("associativity.exact", 1e-12);
    const double num_tol = r.tol("associativity.numeric", 1e-5);
    auto rng = r.rng(3);
    for (double theta : cfg.thetas) {
        DeformationMatrix J = cfg.J(theta);
        std::vector<PlaneWaveSymbol> e;
        for (const auto& m : box) e.push_back(PlaneWaveSymbol::single(L, m, one));
        double worst = 0.0;
        for (size_t a = 0; a < box.size(); ++a)
            for (size_t b = 0; b < box.size(); ++b) {
                PlaneWaveSymbol ab = deformed_product_exact(e[a], e[b], J);
                for (size_t c = 0; c < box.size(); ++c) {
                    PlaneWaveSymbol left = deformed_product_exact(ab, e[c], J);
                    PlaneWaveSymbol right = deformed_product_exact(e[a], deformed_product_exact(e[b], e[c], J), J);
                    Eigen::VectorXd p = e[a].frequency(box[a]), q = e[b].frequency(box[b]),
                                    s = e[c].frequency(box[c]);
                    const cplx oracle =
                        std::polar(1.0, -2.0 * kPi * (p.dot(J.J * q) + p.dot(J.J * s) + q.dot(J.J * s)));
                    std::vector<int> sum(n);
                    for (int i = 0; i < n; ++i) sum[i] = box[a][i] + box[b][i] + box[c][i];
                    if (left.terms.size() != 1 || right.terms.size() != 1 || !left.terms.count(sum) ||
                        !right.terms.count(sum)) {
                        worst = std::numeric_limits<double>::infinity();
                        continue;
                    }
                    const cplx lv = left.terms.at(sum)(0, 0), rv = right.terms.at(sum)(0, 0);
                    worst = std::max({worst, std::abs(lv - rv), std::abs(lv - oracle)});
                }
            }
        r.check("exact/" + theta_tag(theta), worst, exact_tol,
                std::to_string(box.size() * box.size() * box.size()) + " triples");

        double num = 0.0;
        for (int t = 0; t < 10; ++t) {
            Field f = gaussian(g, random_matrix(cfg.k, rng), 0.7, random_center(n, rng, 0.4));
            Field h = gaussian(g, random_matrix(cfg.k, rng), 0.75, random_center(n, rng, 0.4));
            Field k = gaussian(g, random_matrix(cfg.k, rng), 0.7, random_center(n, rng, 0.4));
            Field left = deformed_product_numeric(deformed_product_numeric(f, h, J), k, J);
            Field right = deformed_product_numeric(f, deformed_product_numeric(h, k, J), J);
            const double scale = f.sup_norm() * h.sup_norm() * k.sup_norm();
            num = std::max(num, (left - right).sup_norm() / scale);
        }
        r.check("numeric/" + theta_tag(theta), num, num_tol, "10 Gaussian triples");
    }
}

void suite_interplay(Recorder& r) {
    const RunConfig& cfg = r.cfg;
    const Grid g = cfg.grid();
    const double tol = r.tol("interplay", 1e-4);
    auto rng = r.rng(4);
    for (double theta : cfg.thetas) {
        DeformationMatrix J = cfg.J(theta);
        double worst = 0.0;
        for (int t = 0; t < 20; ++t) {
            Field f = random_wave(cfg.n, g.L[0], cfg.k, 2, rng, 3).sample(g);
            Field q = random_wave(cfg.n, g.L[0], cfg.k, 2, rng, 3).sample(g);
            Field h = gaussian(g, random_matrix(cfg.k, rng), 0.8, random_center(cfg.n, rng, 0.5));
            DiscretizedOperator Lf = rieffel_operator(f, J), Lq = rieffel_operator(q, J);
            DiscretizedOperator Lfq = rieffel_operator(deformed_product_numeric(f, q, J), J);
            Field lhs = Lf.apply(Lq.apply(h));
            Field rhs = Lfq.apply(h);
            const double scale = operator_norm(Lf) * operator_norm(Lq) * h.l2_norm();
            worst = std::max(worst, (lhs - rhs).l2_norm() / scale);
        }
        r.check(theta_tag(theta), worst, tol, "20 band-limited pairs, Gaussian h");
    }
}

void suite_cv(Recorder& r) {
    const RunConfig& cfg = r.cfg;
    const double tol = r.tol("cv", 0.10);
    const int N0 = 128;
    const double L = 8.0;
    auto rng = r.rng(5);
    Grid coarse = Grid::cube(1, N0, L);
    // Lattice frequencies of the coarse grid stay on the lattice after N -> 2N.
    std::vector<PhasePlaneWave> family;
    std::uniform_int_distribution<int> nterms(2, 4);
    for (int i = 0; i < 50; ++i) {
        int mask = i < 15 ? 2 : (i < 30 ? 1 : 3);
        family.push_back(lattice_symbol(coarse, cfg.k, rng, nterms(rng), 12, mask, true));
    }
    double fit[2] = {0.0, 0.0}, mixed[2] = {0.0, 0.0};
    for (int level = 0; level < 2; ++level) {
        Grid xg = Grid::cube(1, N0 << level, L);
        for (size_t i = 0; i < family.size(); ++i) {
            const double q = cv_ratio(family[i], xg);
            fit[level] = std::max(fit[level], q);
            if (i >= 30) mixed[level] = std::max(mixed[level], q);
        }
        r.rep.metrics["C_fit_N" + std::to_string(N0 << level)] = fit[level];
        r.rep.metrics["mixed_max_N" + std::to_string(N0 << level)] = mixed[level];
    }
    r.check("refinement_drift", std::abs(fit[1] - fit[0]) / fit[0], tol, "|C(2N) - C(N)| / C(N)");
    r.check("family_bound_refined", fit[1], (1.0 + tol) * fit[0], "max cv_ratio at 2N vs (1 + tol) C_fit(N)");
}

void suite_derivsymb(Recorder& r) {
    const RunConfig& cfg = r.cfg;
    const Grid g = cfg.grid();
    const int n = cfg.n;
    const double tol = r.tol("derivsymb", 1e-3);
    auto rng = r.rng(6);
    double worst[2] = {0.0, 0.0};
    for (int t = 0; t < 10; ++t) {
        PhasePlaneWave s = lattice_symbol(g, cfg.k, rng, 3, 2);
        DiscretizedOperator A = DiscretizedOperator::from_symbol(s, g);
        Field h = gaussian(g, random_matrix(cfg.k, rng), 0.8, std::vector<double>(n, 0.0));
        for (int k = 1; k <= 2; ++k)
            for (const auto& alpha : multi_indices(2 * n, k)) {
                Field x = delta(A, alpha, DeltaRoute::FiniteDifference, 1e-2).apply(h);
                Field y = delta(A, alpha, DeltaRoute::Symbol).apply(h);
                const double ny = y.l2_norm();
                double rel = ny > 1e-12 * h.l2_norm() ? (x - y).l2_norm() / ny : x.l2_norm() / h.l2_norm();
                worst[k - 1] = std::max(worst[k - 1], rel);
            }
    }
    r.check("order=1", worst[0], tol, "10 symbols, Gaussian vectors");
    r.check("order=2", worst[1], tol, "10 symbols, Gaussian vectors");
}

void suite_dinverse(Recorder& r) {
    const RunConfig& cfg = r.cfg;
    const double tol = r.tol("dinverse", 1e-6);
    auto rng = r.rng(7);
    Grid xg = Grid::cube(1, 32, 4.0);
    double pw = 0.0, grid = 0.0, closed = 0.0;
    for (int t = 0; t < 10; ++t) {
        PhasePlaneWave b = lattice_symbol(xg, cfg.k, rng, 3, 4);
        b.compress();
        PhasePlaneWave a = std::get<PhasePlaneWave>(d_inverse(b));
        const double scale = phase_sup(b, xg);
        for (size_t j = 0; j < b.terms.size() && j < a.terms.size(); ++j) {
            cplx za(1.0, b.terms[j].alpha[0]), zb(1.0, b.terms[j].beta[0]);
            closed = std::max(closed, (a.terms[j].c - b.terms[j].c / (za * za * zb * zb)).cwiseAbs().maxCoeff() /
                                          b.terms[j].c.cwiseAbs().maxCoeff());
        }
        if (a.terms.size() != b.terms.size()) closed = std::numeric_limits<double>::infinity();
        pw = std::max(pw, phase_diff(std::get<PhasePlaneWave>(d_apply(a)), b, xg) / scale);
        PhaseGrid bg = PhaseGrid::sample(b, xg);
        PhaseGrid rg = std::get<PhaseGrid>(d_apply(d_inverse(bg)));
        grid = std::max(grid, (rg.f - bg.f).sup_norm() / scale);
    }
    r.check("plane_wave", pw, tol, "sup |D d_inverse(b) - b| / sup |b|, |m| <= 4");
    r.check("grid", grid, tol, "grid route, same family");
    r.check("closed_form", closed, tol, "coefficients vs b / ((1 + i alpha)^2 (1 + i beta)^2)");
}

void suite_kernel(Recorder& r) {
    const double tol = r.tol("kernel", 1e-6);
    double worst = 0.0;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) worst = std::max(worst, kernel_identity_residual(-3.0 + 0.75 * i, -3.0 + 0.75 * j));
    r.check("grid5x5", worst, tol, "(s, t) in [-3, 0]^2");
}

std::vector<PhasePlaneWave> symbol_map_family(const Recorder& r, const Grid& g) {
    auto rng = r.rng(9);
    std::vector<PhasePlaneWave> fam;
    for (int t = 0; t < 10; ++t) fam.push_back(lattice_symbol(g, 1, rng, 3, 2));
    return fam;
}

void suite_symbol_map(Recorder& r) {
    SymbolMapSpec spec;
    spec.workers = r.cfg.workers;
    const double tol = r.tol("symbol_map", 0.05);
    Grid g = spec.grid();
    double worst = 0.0, route = 0.0;
    for (const auto& a : symbol_map_family(r, g)) {
        SymbolMapReport rep;
        PhaseGrid s = symbol_map_S(DiscretizedOperator::from_symbol(a, g), spec, &rep);
        PhaseGrid ref = PhaseGrid::sample(a, g);
        worst = std::max(worst, (s.f - ref.f).sup_norm() / ref.f.sup_norm());
        route = std::max(route, rep.route_disagreement);
    }
    r.rep.metrics["route_disagreement"] = route;
    r.check("S_of_Op", worst, tol, "10 symbols, |m| <= 2, N = " + std::to_string(spec.N));
}

void suite_inverse_cv(Recorder& r) {
    SymbolMapSpec spec;
    Grid g = spec.grid();
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& a : symbol_map_family(r, g)) {
        auto [lhs, rhs] = inverse_cv_bound(a, spec);
        worst = std::max(worst, lhs - rhs);
    }
    r.rep.metrics["u_norm"] = kernel_u_norm();
    r.rep.metrics["v_norm"] = kernel_v_norm();
    r.check("slack", worst, 0.0, "max of sup|a| - bound over the symbol_map family");
}

void suite_diffnorm(Recorder& r) {
    const RunConfig& cfg = r.cfg;
    const Grid g = cfg.grid();
    const double tol = r.tol("diffnorm", 1e-6);
    auto rng = r.rng(11);
    const int m = cfg.m;
    for (double theta : cfg.thetas) {
        DeformationMatrix J = cfg.J(theta);
        double t0 = 0.0, leib = -std::numeric_limits<double>::infinity(), sub = leib;
        for (int t = 0; t < 20; ++t) {
            PlaneWaveSymbol f = random_wave(cfg.n, g.L[0], cfg.k, 3, rng, 1);
            PlaneWaveSymbol h = random_wave(cfg.n, g.L[0], cfg.k, 3, rng, 1);
            DiscretizedOperator Lf = rieffel_operator(f, J, g), Lh = rieffel_operator(h, J, g);
            DiscretizedOperator Lfh = rieffel_operator(deformed_product_exact(f, h, J), J, g);
            auto a = differential_norms(Lf, m), b = differential_norms(Lh, m), ab = differential_norms(Lfh, m);
            t0 = std::max(t0, std::abs(a.T[0] - operator_norm(Lf)));
            for (int k = 0; k <= m; ++k) {
                double rhs = 0.0;
                for (int i = 0; i <= k; ++i) rhs += a.T[i] * b.T[k - i];
                leib = std::max(leib, ab.T[k] - rhs);
                sub = std::max(sub, ab.s[k] - a.s[k] * b.s[k]);
            }
        }
        r.check("T0_is_operator_norm/" + theta_tag(theta), t0, 0.0, "exact equality");
        r.check("leibniz/" + theta_tag(theta), leib, tol, "max T_k(ab) - sum T_i(a) T_j(b), 20 pairs");
        r.check("submultiplicative/" + theta_tag(theta), sub, tol, "max s_m(ab) - s_m(a) s_m(b), 20 pairs");
    }
}

void suite_appendix_a(Recorder& r) {
    const double tol = r.tol("appendix_a", 1e-10);
    auto rng = r.rng(12);
    std::uniform_real_distribution<double> ur(2.0, 3.0), ang(0.0, 2.0 * kPi);
    double inv = 0.0, shifted = 0.0, uni = 0.0, radius = 0.0, singular = 0.0;
    for (int i = 0; i < 100; ++i) {
        const int k = 1 + i % 4;
        MatrixElement a = random_matrix(k, rng, 0.5);
        const MatrixElement I = MatrixElement::Identity(k, k);
        const cplx lambda = std::polar(ur(rng), ang(rng));

        UnitizedElement x{a, lambda};
        UnitizedElement y = unitized_inverse(x);
        UnitizedElement e1 = x * y, e2 = y * x;
        inv = std::max({inv, e1.body.cwiseAbs().maxCoeff(), std::abs(e1.scalar - 1.0), e2.body.cwiseAbs().maxCoeff(),
                        std::abs(e2.scalar - 1.0)});
        // (a, alpha)^{-1} = ((alpha 1 + a)^{-1} - alpha^{-1} 1, alpha^{-1})
        MatrixElement closed = (lambda * I + a).inverse() - I / lambda;
        inv = std::max({inv, (y.body - closed).cwiseAbs().maxCoeff(), std::abs(y.scalar - 1.0 / lambda)});

        MatrixElement b = a + 2.0 * I;
        UnitizedElement z = unitized_inverse({b - I, 1.0});
        shifted = std::max({shifted, (z.body - (b.inverse() - I)).cwiseAbs().maxCoeff(), std::abs(z.scalar - 1.0)});

        // sigma in the unitization = sigma(a) u {0}, compared as sets.
        Spectrum sp = spectrum(a);
        Eigen::ComplexEigenSolver<MatrixElement> es(a);
        std::vector<cplx> expect(es.eigenvalues().data(), es.eigenvalues().data() + k);
        expect.push_back(0.0);
        auto dist = [](const std::vector<cplx>& from, const std::vector<cplx>& to) {
            double d = 0.0;
            for (cplx u : from) {
                double best = std::numeric_limits<double>::infinity();
                for (cplx v : to) best = std::min(best, std::abs(u - v));
                d = std::max(d, best);
            }
            return d;
        };
        uni = std::max({uni, dist(sp.unitized, expect), dist(expect, sp.unitized)});
        radius = std::max(radius, std::abs(spectral_radius(sp.unitized) - spectral_radius(sp.values)));
        for (cplx mu : sp.values) {
            Eigen::JacobiSVD<MatrixElement> svd(a - mu * I);
            singular = std::max(singular, svd.singularValues()(k - 1) / std::max(1.0, cstar_norm(a)));
        }
    }
    r.check("unitized_inverse", inv, tol, "100 matrices, k <= 4");
    r.check("unit_shift_inverse", shifted, tol, "(b - 1, 1)^{-1} = (b^{-1} - 1, 1)");
    r.check("spectrum_union", uni, tol, "sigma~(a) = sigma(a) u {0}");
    r.check("spectral_radius", radius, tol, "r~(a) = r(a)");
    r.check("eigenvalues_singular", singular, tol, "min singular value of a - mu");
}

void suite_fourier_inversion(Recorder& r) {
    const double tol = r.tol("fourier_inversion", 1e-6);
    auto rng = r.rng(13);
    const MatrixElement c = random_matrix(r.cfg.k, rng);
    const std::vector<double> xs{-1.0, -0.4, 0.0, 0.5, 0.75};
    double konst = 0.0, wave = 0.0, gauss = 0.0;
    Grid g = Grid::default_for(1);
    Field gs = gaussian(g, c, 1.0, {0.0});
    for (double x : xs) {
        konst = std::max(konst, fourier_inversion_check(PlaneWaveSymbol::constant(1, 4.0, c), {x}));
        wave = std::max(wave, fourier_inversion_check(PlaneWaveSymbol::single(4.0, {3}, c), {x}));
        gauss = std::max(gauss, fourier_inversion_check(gs, {x}));
    }
    r.check("constant", konst, tol, "5 points");
    r.check("plane_wave", wave, tol, "5 points");
    r.check("gaussian", gauss, tol, "5 points");
}

void suite_lemma_uniq(Recorder& r) {
    auto rng = r.rng(14);
    std::uniform_real_distribution<double> ur(0.05, 0.99);
    for (double eps : {0.1, 1.0, 10.0}) {
        double far = 0.0, near = 0.0;
        for (int t = 0; t < 20; ++t) {
            const int k = 1 + t % 4;
            MatrixElement y = random_hermitian(k, rng);
            const double ny = cstar_norm(y);
            MatrixElement big = y * (3.0 * eps * ur(rng) / ny);
            far = std::max(far, cstar_norm(lemma_uniq_smooth(big, eps) - big));
            MatrixElement small = y * (eps / 3.0 * ur(rng) / ny);
            near = std::max(near, lemma_uniq_smooth(small, eps).cwiseAbs().maxCoeff());
        }
        const std::string tag = "eps=" + short_fmt(eps);
        r.check("distance/" + tag, far, 2.0 * eps / 3.0, "|f(y) - y| <= 2 eps / 3");
        r.check("vanishing/" + tag, near, 0.0, "f(y) = 0 for |y| <= eps / 3");
    }
}

void suite_plancherel(Recorder& r) {
    const RunConfig& cfg = r.cfg;
    const double tol = r.tol("plancherel", 1e-10);
    auto rng = r.rng(15);
    Grid g = cfg.grid();
    std::normal_distribution<double> nd;
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
        Field u(g, cfg.k, cfg.k), v(g.dual(), cfg.k, cfg.k);
        for (auto& z : u.raw()) z = cplx(nd(rng), nd(rng));
        for (auto& z : v.raw()) z = cplx(nd(rng), nd(rng));
        u *= 1.0 / u.l2_norm();
        v *= 1.0 / v.l2_norm();
        MatrixElement lhs = inner_product(fourier(u, 1), v);
        MatrixElement rhs = inner_product(u, fourier(v, -1));
        worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
    }
    r.check("pairs50", worst, tol, "unit-norm random module vectors");
}

using SuiteFn = void (*)(Recorder&);

struct SuiteEntry {
    SuiteInfo info;
    SuiteFn fn;
    double budget_seconds;  // 0: no runtime claim
};

const std::vector<SuiteEntry>& entries() {
    static const std::vector<SuiteEntry> e{
        {{"plane_wave", 1, "Eq. rieffelprod", "numeric product vs e_p x e_q oracle, |m| <= 3"}, suite_plane_wave, 60.0},
        {{"sup_op", 2, "Prop. sup-op", "sup norm = operator norm at J = 0"}, suite_sup_op, 0.0},
        {{"associativity", 3, "Eq. rieffelprod", "exact phases and Gaussian triples"}, suite_associativity, 0.0},
        {{"interplay", 4, "Eq. interplay", "L_f L_g = L_{f x g}"}, suite_interplay, 0.0},
        {{"cv", 5, "Thm. calderon", "C_fit over a 50-symbol family, N -> 2N"}, suite_cv, 0.0},
        {{"derivsymb", 6, "Eq. derivsymb", "finite-difference vs symbol generators"}, suite_derivsymb, 0.0},
        {{"dinverse", 7, "Appendix C Lemma", "D d_inverse(b) = b"}, suite_dinverse, 0.0},
        {{"kernel", 8, "Appendix C kernel identity", "int conj(u) v = gamma2 gamma2 e^{-ist}"}, suite_kernel, 0.0},
        {{"symbol_map", 9, "S o Op = id", "S(Op a) = a at N = 128"}, suite_symbol_map, 600.0},
        {{"inverse_cv", 10, "Eq. invcalderon", "sup |a| <= (2 pi)^{1/2} |u| |v| |D ...|"}, suite_inverse_cv, 0.0},
        {{"diffnorm", 11, "Def. diffnorm", "T_0, Leibniz, submultiplicative s_m"}, suite_diffnorm, 0.0},
        {{"appendix_a", 12, "Appendix A", "unitized inverse and spectrum union"}, suite_appendix_a, 0.0},
        {{"fourier_inversion", 13, "Appendix B Fourier inversion", "f(x) = int int e^{2 pi i u.v} f(x + v)"},
         suite_fourier_inversion, 0.0},
        {{"lemma_uniq", 14, "Lemma uniq", "smoothing f(y) = y (1 - chi(y))"}, suite_lemma_uniq, 0.0},
        {{"plancherel", 15, "Eq. plancherel", "<F u, v> = <u, F^{-1} v>"}, suite_plancherel, 0.0},
    };
    return e;
}

}  // namespace

// ---------------------------------------------------------------- RunConfig

RunConfig RunConfig::parse(const std::string& text) {
    RunConfig c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
        try {
            if (val.empty()) throw ParseError("empty value");
            if (key == "n") c.n = static_cast<int>(to_long(val));
            else if (key == "k") c.k = static_cast<int>(to_long(val));
            else if (key == "N") c.N = static_cast<int>(to_long(val));
            else if (key == "L") c.L = to_double(val);
            else if (key == "m") c.m = static_cast<int>(to_long(val));
            else if (key == "theta") c.thetas = {to_double(val)};
            else if (key == "thetas") {
                c.thetas.clear();
                for (const auto& t : split(val, ',')) c.thetas.push_back(to_double(t));
            } else if (key == "block") c.block = val;
            else if (key == "J") {
                auto rows = split(val, ';');
                Eigen::MatrixXd J(rows.size(), rows.size());
                for (size_t i = 0; i < rows.size(); ++i) {
                    std::istringstream rs(rows[i]);
                    std::vector<double> entries;
                    for (std::string tok; rs >> tok;) entries.push_back(to_double(tok));
                    if (entries.size() != rows.size()) throw ParseError("J must be square");
                    for (size_t j = 0; j < rows.size(); ++j) J(i, j) = entries[j];
                }
                c.J_explicit = J;
                c.block = "explicit";
            } else if (key.rfind("tol.", 0) == 0 && key.size() > 4) c.tol[key.substr(4)] = to_double(val);
            else if (key == "suites") c.suites = split(val, ',');
            else if (key == "out") c.out = val;
            else if (key == "csv") c.csv = val;
            else if (key == "workers") c.workers = static_cast<int>(to_long(val));
            else if (key == "seed") c.seed = std::stoull(val, nullptr, 0);
            else if (key == "report_timing") c.report_timing = to_bool(val);
            else throw ParseError("unknown key '" + key + "'");
        } catch (const ParseError& e) {
            std::string what = e.what();
            const std::string prefix = "ParseError: ";
            if (what.rfind(prefix, 0) == 0) what = what.substr(prefix.size());
            throw ParseError("line " + std::to_string(lineno) + ": " + what);
        } catch (const std::logic_error&) {
            throw ParseError("line " + std::to_string(lineno) + ": bad value for '" + key + "'");
        }
    }
    c.validate();
    return c;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

void RunConfig::validate() const {
    auto fail = [](const std::string& m) { throw InvalidInputError(m); };
    if (n != 1 && n != 2) fail("n must be 1 or 2");
    if (k < 1 || k > 8) fail("k must be in 1..8");
    if (N != 0 && (N < 8 || (N & (N - 1)) != 0)) fail("N must be a power of two >= 8");
    if (!(L >= 0.0) || !std::isfinite(L)) fail("L must be positive");
    if (m < 0 || m > kMaxDerivativeOrder) fail("m must be in 0..8");
    if (thetas.empty()) fail("at least one theta is needed");
    for (double t : thetas)
        if (!std::isfinite(t)) fail("theta must be real");
    if (block == "symplectic") {
        if (n % 2) fail("symplectic block needs even n");
    } else if (block == "explicit") {
        if (!J_explicit || J_explicit->rows() != n) fail("explicit J must be n x n");
        if ((*J_explicit + J_explicit->transpose()).cwiseAbs().maxCoeff() > 1e-12) fail("J must be skew-symmetric");
    } else if (block != "zero") {
        fail("block must be symplectic, zero or explicit");
    }
    for (const auto& [key, v] : tol)
        if (!(v > 0.0) || !std::isfinite(v)) fail("tolerance tol." + key + " must be positive");
    if (workers < 1) fail("workers must be positive");
}

Grid RunConfig::grid() const {
    Grid g = Grid::default_for(n);
    return Grid::cube(n, N ? N : g.N[0], L > 0.0 ? L : g.L[0]);
}

DeformationMatrix RunConfig::J(double theta) const {
    if (block == "zero") return DeformationMatrix::zero(n);
    if (block == "explicit") return DeformationMatrix::from(theta * *J_explicit);
    return DeformationMatrix::symplectic(n, theta);
}

double RunConfig::tolerance(const std::string& name, double fallback) const {
    auto it = tol.find(name);
    return it == tol.end() ? fallback : it->second;
}

nlohmann::ordered_json RunConfig::to_json() const {
    nlohmann::ordered_json j;
    Grid g = grid();
    j["n"] = n;
    j["k"] = k;
    j["N"] = g.N[0];
    j["L"] = g.L[0];
    j["m"] = m;
    j["thetas"] = thetas;
    j["block"] = block;
    if (J_explicit) {
        nlohmann::json rows = nlohmann::json::array();
        for (int i = 0; i < J_explicit->rows(); ++i) {
            std::vector<double> row(J_explicit->cols());
            for (int c = 0; c < J_explicit->cols(); ++c) row[c] = (*J_explicit)(i, c);
            rows.push_back(row);
        }
        j["J"] = rows;
    }
    j["tol"] = tol;
    j["seed"] = seed;
    return j;
}

// ---------------------------------------------------------------- suites

int SuiteReport::passed() const {
    return static_cast<int>(std::count_if(checks.begin(), checks.end(), [](const CheckRecord& c) { return c.pass; }));
}

const std::vector<SuiteInfo>& suite_catalog() {
    static const std::vector<SuiteInfo> cat = [] {
        std::vector<SuiteInfo> v;
        for (const auto& e : entries()) v.push_back(e.info);
        return v;
    }();
    return cat;
}

bool is_suite(const std::string& name) {
    for (const auto& e : entries())
        if (e.info.name == name) return true;
    return false;
}

SuiteReport run_suite(const std::string& name, const RunConfig& cfg) {
    const SuiteEntry* entry = nullptr;
    for (const auto& e : entries())
        if (e.info.name == name) entry = &e;
    if (!entry) throw InvalidInputError("unknown suite '" + name + "'");
    SuiteReport rep;
    rep.suite = name;
    Recorder rec{rep, cfg, entry->info.anchor};
    auto t0 = std::chrono::steady_clock::now();
    try {
        entry->fn(rec);
    } catch (const std::exception& e) {
        rec.check("error", std::numeric_limits<double>::quiet_NaN(), 0.0, e.what());
    }
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (cfg.report_timing && entry->budget_seconds > 0.0)
        rec.check("runtime", rep.wall_seconds, entry->budget_seconds, "seconds");
    std::sort(rep.checks.begin(), rep.checks.end(),
              [](const CheckRecord& a, const CheckRecord& b) { return a.claim < b.claim; });
    return rep;
}

std::vector<SuiteReport> run_suites(const std::vector<std::string>& names, const RunConfig& cfg, int workers) {
    for (const auto& n : names)
        if (!is_suite(n)) throw InvalidInputError("unknown suite '" + n + "'");
    std::vector<std::string> todo = names;
    if (todo.empty())
        for (const auto& e : entries()) todo.push_back(e.info.name);
    std::sort(todo.begin(), todo.end());
    todo.erase(std::unique(todo.begin(), todo.end()), todo.end());

    std::vector<SuiteReport> out(todo.size());
    std::atomic<size_t> next{0};
    auto work = [&] {
        for (size_t i; (i = next++) < todo.size();) out[i] = run_suite(todo[i], cfg);
    };
    const int nthreads = std::max(1, std::min<int>(workers, static_cast<int>(todo.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < nthreads; ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    return out;
}

nlohmann::ordered_json report_json(const std::vector<SuiteReport>& reports, const RunConfig& cfg) {
    nlohmann::ordered_json j;
    j["schema_version"] = kReportSchemaVersion;
    j["config"] = cfg.to_json();
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr); };
    int total = 0, passed = 0, suites_ok = 0;
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : reports) {
        nlohmann::ordered_json s;
        s["suite"] = r.suite;
        nlohmann::ordered_json checks = nlohmann::ordered_json::array();
        for (const auto& c : r.checks) {
            nlohmann::ordered_json cj;
            cj["claim"] = c.claim;
            cj["anchor"] = c.anchor;
            cj["measured"] = num(c.measured);
            cj["bound"] = num(c.bound);
            cj["pass"] = c.pass;
            if (!c.note.empty()) cj["note"] = c.note;
            checks.push_back(cj);
        }
        s["checks"] = checks;
        if (!r.metrics.empty()) {
            nlohmann::ordered_json m;
            for (const auto& [k, v] : r.metrics) m[k] = num(v);
            s["metrics"] = m;
        }
        s["summary"] = {{"checks", r.checks.size()}, {"passed", r.passed()}, {"failed", r.failed()}};
        if (cfg.report_timing) s["wall_seconds"] = r.wall_seconds;
        total += static_cast<int>(r.checks.size());
        passed += r.passed();
        suites_ok += r.ok();
        arr.push_back(s);
    }
    j["suites"] = arr;
    j["summary"] = {{"suites", reports.size()},
                    {"suites_passed", suites_ok},
                    {"checks", total},
                    {"passed", passed},
                    {"failed", total - passed}};
    return j;
}

// ---------------------------------------------------------------- norms and products

ThetaSweep ThetaSweep::parse(const std::string& spec) {
    auto parts = split(spec, ':');
    if (parts.size() != 3) throw ParseError("theta sweep must be start:step:end");
    ThetaSweep s{to_double(parts[0]), to_double(parts[1]), to_double(parts[2])};
    if (!(s.step > 0.0) || s.end < s.start) throw ParseError("theta sweep needs step > 0 and end >= start");
    return s;
}

std::vector<double> ThetaSweep::values() const {
    std::vector<double> v;
    const long count = std::lround(std::floor((end - start) / step + 1e-9));
    for (long i = 0; i <= count; ++i) v.push_back(start + i * step);
    return v;
}

NormsRow compute_norms(const AnySymbol& f, const RunConfig& cfg, double theta) {
    NormsRow row;
    row.theta = theta;
    DeformationMatrix J = cfg.J(theta);
    std::optional<DiscretizedOperator> L;
    PhasePlaneWave tilde;
    Grid xg;
    if (const Field* fs = std::get_if<Field>(&f)) {
        if (fs->grid().n != cfg.n) throw InvalidInputError("symbol dimension differs from config n");
        xg = fs->grid();
        L = rieffel_operator(*fs, J);
        row.sup_norm = fs->sup_norm();
        tilde = tilde_map(*fs, J);
    } else {
        const auto& pw = std::get<PlaneWaveSymbol>(f);
        if (pw.n != cfg.n) throw InvalidInputError("symbol dimension differs from config n");
        xg = Grid::cube(pw.n, cfg.grid().N[0], pw.L);
        L = rieffel_operator(pw, J, xg);
        row.sup_norm = pw.sample(xg).sup_norm();
        tilde = tilde_map(pw, J);
    }
    DifferentialNormReport dn = differential_norms(*L, cfg.m);
    row.op_norm = dn.T[0];
    row.T = dn.T;
    row.s = dn.s;
    const double pi_a = cv_functional(tilde, xg);
    row.cv_ratio = pi_a > 0.0 ? row.op_norm / pi_a : 0.0;
    return row;
}

std::string norms_csv(const std::vector<NormsRow>& rows, int m) {
    std::string out = "theta,sup_norm,op_norm";
    for (int i = 0; i <= m; ++i) out += ",T_" + std::to_string(i);
    for (int i = 0; i <= m; ++i) out += ",s_" + std::to_string(i);
    out += ",cv_ratio\n";
    for (const auto& r : rows) {
        out += fmt(r.theta) + "," + fmt(r.sup_norm) + "," + fmt(r.op_norm);
        for (double t : r.T) out += "," + fmt(t);
        for (double s : r.s) out += "," + fmt(s);
        out += "," + fmt(r.cv_ratio) + "\n";
    }
    return out;
}

ProductOutcome compute_product(const AnySymbol& f, const AnySymbol& g, const RunConfig& cfg) {
    const double theta = cfg.thetas.front();
    DeformationMatrix J = cfg.J(theta);
    auto dim = [](const AnySymbol& s) {
        return std::holds_alternative<Field>(s) ? std::get<Field>(s).grid().n : std::get<PlaneWaveSymbol>(s).n;
    };
    if (dim(f) != cfg.n || dim(g) != cfg.n) throw InvalidInputError("symbol dimension differs from config n");
    ProductOutcome out;
    if (std::holds_alternative<PlaneWaveSymbol>(f) && std::holds_alternative<PlaneWaveSymbol>(g)) {
        out.result = deformed_product_exact(std::get<PlaneWaveSymbol>(f), std::get<PlaneWaveSymbol>(g), J);
        out.route = "exact";
        return out;
    }
    const Grid grid = std::holds_alternative<Field>(f) ? std::get<Field>(f).grid() : std::get<Field>(g).grid();
    auto on_grid = [&](const AnySymbol& s) {
        return std::holds_alternative<Field>(s) ? std::get<Field>(s) : std::get<PlaneWaveSymbol>(s).sample(grid);
    };
    ProductReport rep;
    out.result = deformed_product_numeric(on_grid(f), on_grid(g), J, OscIntegralConfig{}, &rep);
    out.disagreement = rep.disagreement;
    out.route = rep.oracle;
    return out;
}

}  // namespace rieffel
