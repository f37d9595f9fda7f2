#include "doctest.h"
#include "helpers.hpp"
#include "rieffel/verify.hpp"

using namespace rieffel;
using testing::kPi;

TEST_CASE("config parsing") {
    RunConfig d = RunConfig::parse("");
    CHECK(d.n == 2);
    CHECK(d.thetas == std::vector<double>{0.0, 0.25, 1.0});
    CHECK(d.grid().same_as(Grid::default_for(2)));

    RunConfig c = RunConfig::parse(
        "# comment line\n"
        "n = 2   # trailing comment\n"
        "k=3\n"
        "N = 32\n"
        "L = 5.5\n"
        "thetas = 0, 0.5\n"
        "tol.kernel = 1e-7\n"
        "suites = kernel, plancherel\n"
        "workers = 4\n"
        "seed = 0x10\n"
        "report_timing = true\n");
    CHECK(c.k == 3);
    CHECK(c.grid().N[0] == 32);
    CHECK(c.grid().L[1] == 5.5);
    CHECK(c.thetas == std::vector<double>{0.0, 0.5});
    CHECK(c.tolerance("kernel", 1.0) == 1e-7);
    CHECK(c.tolerance("other", 0.5) == 0.5);
    CHECK(c.suites == std::vector<std::string>{"kernel", "plancherel"});
    CHECK(c.workers == 4);
    CHECK(c.seed == 16);
    CHECK(c.report_timing);
    CHECK(c.J(0.5).J(0, 1) == 0.5);
    CHECK(c.J(0.5).J(1, 0) == -0.5);

    RunConfig e = RunConfig::parse("J = 0 2; -2 0\ntheta = 0.5\n");
    CHECK(e.block == "explicit");
    CHECK(e.J(0.5).J(0, 1) == 1.0);
    CHECK(RunConfig::parse("n = 1\nblock = zero\n").J(3.0).J.norm() == 0.0);
}

TEST_CASE("config errors") {
    auto line_of = [](const std::string& text) -> std::string {
        try {
            RunConfig::parse(text);
        } catch (const ParseError& e) {
            return e.what();
        }
        return "";
    };
    CHECK(line_of("n = 2\nno equals here\n").find("line 2") != std::string::npos);
    CHECK(line_of("n = 2\n\nk = two\n").find("line 3") != std::string::npos);
    CHECK(line_of("color = blue\n").find("unknown key") != std::string::npos);
    CHECK(line_of("J = 0 1; 2\n").find("line 1") != std::string::npos);
    CHECK_THROWS_AS(RunConfig::parse("n = 3\n"), InvalidInputError);
    CHECK_THROWS_AS(RunConfig::parse("n = 1\n"), InvalidInputError);  // symplectic block needs even n
    CHECK_THROWS_AS(RunConfig::parse("N = 48\n"), InvalidInputError);
    CHECK_THROWS_AS(RunConfig::parse("tol.kernel = -1\n"), InvalidInputError);
    CHECK_THROWS_AS(RunConfig::parse("tol.kernel = 0\n"), InvalidInputError);
    CHECK_THROWS_AS(RunConfig::parse("J = 0 1; 1 0\n"), InvalidInputError);
    CHECK_THROWS_AS(RunConfig::parse("workers = 0\n"), InvalidInputError);
    CHECK_THROWS_AS(RunConfig::load("/nonexistent/run.cfg"), ParseError);
}

TEST_CASE("theta sweep") {
    auto v = ThetaSweep::parse("0:0.1:1").values();
    REQUIRE(v.size() == 11);
    CHECK(v.front() == 0.0);
    CHECK(v.back() == doctest::Approx(1.0));
    CHECK(ThetaSweep::parse("0.5:1:0.5").values().size() == 1);
    CHECK_THROWS_AS(ThetaSweep::parse("0:0:1"), ParseError);
    CHECK_THROWS_AS(ThetaSweep::parse("1:0.1:0"), ParseError);
    CHECK_THROWS_AS(ThetaSweep::parse("0:1"), ParseError);
}

TEST_CASE("suite catalog") {
    const auto& cat = suite_catalog();
    REQUIRE(cat.size() == 15);
    for (size_t i = 0; i < cat.size(); ++i) {
        CHECK(cat[i].criterion == static_cast<int>(i) + 1);
        CHECK_FALSE(cat[i].anchor.empty());
        CHECK(is_suite(cat[i].name));
    }
    CHECK_FALSE(is_suite("nope"));
    CHECK_THROWS_AS(run_suite("nope", RunConfig{}), InvalidInputError);
    CHECK_THROWS_AS(run_suites({"kernel", "nope"}, RunConfig{}, 1), InvalidInputError);
}

TEST_CASE("reports") {
    RunConfig cfg;
    auto reports = run_suites({"plancherel", "kernel", "appendix_a", "kernel"}, cfg, 2);
    REQUIRE(reports.size() == 3);
    CHECK(reports[0].suite == "appendix_a");
    CHECK(reports[2].suite == "plancherel");
    for (const auto& r : reports) {
        CHECK(r.ok());
        CHECK(std::is_sorted(r.checks.begin(), r.checks.end(),
                             [](const CheckRecord& a, const CheckRecord& b) { return a.claim < b.claim; }));
        for (const auto& c : r.checks) {
            CHECK(c.pass == (c.measured <= c.bound));
            CHECK(c.claim.rfind(r.suite + "/", 0) == 0);
        }
    }
    auto j = report_json(reports, cfg);
    CHECK(j["schema_version"] == 1);
    CHECK(j["summary"]["suites"] == 3);
    CHECK(j["summary"]["failed"] == 0);
    CHECK_FALSE(j["suites"][0].contains("wall_seconds"));
    CHECK(j["suites"][1]["checks"][0]["anchor"] == "Appendix C kernel identity");

    // Byte-identical across runs and worker counts.
    auto again = report_json(run_suites({"kernel", "appendix_a", "plancherel"}, cfg, 1), cfg);
    CHECK(again.dump() == j.dump());

    RunConfig timed = cfg;
    timed.report_timing = true;
    CHECK(report_json(run_suites({"kernel"}, timed, 1), timed)["suites"][0].contains("wall_seconds"));

    // A tolerance below the achievable residual must fail.
    RunConfig strict = RunConfig::parse("tol.kernel = 1e-30\n");
    SuiteReport s = run_suite("kernel", strict);
    CHECK_FALSE(s.ok());
    CHECK(s.checks[0].bound == 1e-30);
}

TEST_CASE("cv suite records C_fit") {
    SuiteReport r = run_suite("cv", RunConfig{});
    CHECK(r.ok());
    REQUIRE(r.metrics.count("C_fit_N128"));
    REQUIRE(r.metrics.count("C_fit_N256"));
    CHECK(r.metrics["C_fit_N128"] > 0.0);
}

TEST_CASE("norms rows") {
    RunConfig cfg = RunConfig::parse("N = 32\nL = 5\n");
    MatrixElement c(2, 2);
    c << 1.0, cplx(0, 2), 0.0, -1.0;
    AnySymbol konst = PlaneWaveSymbol::constant(2, 5.0, c);
    NormsRow r0 = compute_norms(konst, cfg, 0.0), r1 = compute_norms(konst, cfg, 1.0);
    CHECK(r0.sup_norm == doctest::Approx(cstar_norm(c)).epsilon(1e-12));
    CHECK(r0.op_norm == doctest::Approx(cstar_norm(c)).epsilon(1e-8));
    CHECK(r0.T[1] == 0.0);
    CHECK(r0.cv_ratio == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(r0.op_norm == r1.op_norm);
    CHECK(r0.s == r1.s);

    // Single wave: T_1 = |c| sum |(2 pi p, J p)|.
    AnySymbol wave = PlaneWaveSymbol::single(5.0, {2, -1}, MatrixElement::Constant(1, 1, 3.0));
    const double theta = 0.5, p1 = 0.2, p2 = -0.1;
    NormsRow w = compute_norms(wave, cfg, theta);
    CHECK(w.op_norm == doctest::Approx(3.0).epsilon(1e-8));
    const double t1 = 3.0 * (2 * kPi * (std::abs(p1) + std::abs(p2)) + theta * (std::abs(p1) + std::abs(p2)));
    CHECK(w.T[1] == doctest::Approx(t1).epsilon(1e-8));
    CHECK(w.s[1] == doctest::Approx(w.T[0] + w.T[1]));

    std::string csv = norms_csv({r0, w}, cfg.m);
    CHECK(csv.rfind("theta,sup_norm,op_norm,T_0,T_1,T_2,s_0,s_1,s_2,cv_ratio\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
    CHECK(csv.find(';') == std::string::npos);

    AnySymbol one_d = PlaneWaveSymbol::constant(1, 5.0, c);
    CHECK_THROWS_AS(compute_norms(one_d, cfg, 0.0), InvalidInputError);
}

TEST_CASE("products") {
    RunConfig cfg = RunConfig::parse("theta = 0.25\n");
    PlaneWaveSymbol f = PlaneWaveSymbol::single(6.0, {1, 0}, MatrixElement::Constant(1, 1, 1.0));
    PlaneWaveSymbol g = PlaneWaveSymbol::single(6.0, {0, 1}, MatrixElement::Constant(1, 1, 1.0));
    ProductOutcome pw = compute_product(f, g, cfg);
    CHECK(pw.route == "exact");
    const auto& out = std::get<PlaneWaveSymbol>(pw.result);
    REQUIRE(out.terms.count({1, 1}));
    // e^{-2 pi i p.Jq}, p = (1/12, 0), q = (0, 1/12), Jq = 0.25 (1/12, 0)
    cplx phase = std::polar(1.0, -2.0 * kPi * 0.25 / 144.0);
    CHECK(std::abs(out.terms.at({1, 1})(0, 0) - phase) < 1e-14);

    RunConfig flat = RunConfig::parse("block = zero\n");
    std::mt19937_64 rng(90);
    Grid grid = Grid::default_for(2);
    Field a = testing::gaussian(grid, testing::random_matrix(2, rng), 0.7, {0.2, 0.0});
    Field b = testing::gaussian(grid, testing::random_matrix(2, rng), 0.7, {0.0, -0.3});
    ProductOutcome num = compute_product(a, b, flat);
    CHECK(num.disagreement <= 1e-6);
    const Field& ab = std::get<Field>(num.result);
    double worst = 0.0;
    for (long p = 0; p < grid.size(); ++p) worst = std::max(worst, (ab.at(p) - a.at(p) * b.at(p)).cwiseAbs().maxCoeff());
    CHECK(worst < 1e-8);

    CHECK_THROWS_AS(compute_product(PlaneWaveSymbol::constant(1, 6.0, MatrixElement::Identity(1, 1)), g, cfg),
                    InvalidInputError);
}
