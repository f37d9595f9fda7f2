/*
 * Run configuration, verification suites keyed to claims, and the report
 * and CSV emitters behind the command-line tool.
 *
 * Config files are flat UTF-8 text:  key = value, '#' starts a comment.
 */
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rieffel/symbol_io.hpp"

namespace rieffel {

struct RunConfig {
    int n = 2;
    int k = 2;
    int N = 0;       // 0: Grid::default_for(n)
    double L = 0.0;  // 0: Grid::default_for(n)
    int m = 2;       // top differential order for norms
    std::vector<double> thetas{0.0, 0.25, 1.0};
    std::string block = "symplectic";       // symplectic | zero | explicit
    std::optional<Eigen::MatrixXd> J_explicit;
    std::map<std::string, double> tol;      // tol.<name> overrides
    std::vector<std::string> suites;        // empty: all
    std::string out, csv;
    int workers = 1;
    unsigned long long seed = 0x5EED;
    bool report_timing = false;

    static RunConfig parse(const std::string& text);
    static RunConfig load(const std::string& path);
    void validate() const;

    Grid grid() const;
    DeformationMatrix J(double theta) const;
    double tolerance(const std::string& name, double fallback) const;
    nlohmann::ordered_json to_json() const;
};

struct CheckRecord {
    std::string claim;
    std::string anchor;
    double measured = 0.0;
    double bound = 0.0;
    bool pass = false;
    std::string note;
};

struct SuiteReport {
    std::string suite;
    std::vector<CheckRecord> checks;
    std::map<std::string, double> metrics;
    double wall_seconds = 0.0;

    int passed() const;
    int failed() const { return static_cast<int>(checks.size()) - passed(); }
    bool ok() const { return !checks.empty() && failed() == 0; }
};

struct SuiteInfo {
    std::string name;
    int criterion;
    std::string anchor;
    std::string summary;
};

const std::vector<SuiteInfo>& suite_catalog();
bool is_suite(const std::string& name);

// Throws InvalidInputError on an unknown name.
SuiteReport run_suite(const std::string& name, const RunConfig& cfg);
// Up to `workers` suites at a time; reports come back sorted by suite name.
std::vector<SuiteReport> run_suites(const std::vector<std::string>& names, const RunConfig& cfg, int workers);

constexpr int kReportSchemaVersion = 1;
nlohmann::ordered_json report_json(const std::vector<SuiteReport>& reports, const RunConfig& cfg);

struct ThetaSweep {
    double start = 0.0, step = 0.1, end = 1.0;
    static ThetaSweep parse(const std::string& spec);  // start:step:end
    std::vector<double> values() const;
};

struct NormsRow {
    double theta = 0.0;
    double sup_norm = 0.0, op_norm = 0.0;
    std::vector<double> T, s;
    double cv_ratio = 0.0;
};

NormsRow compute_norms(const AnySymbol& f, const RunConfig& cfg, double theta);
std::string norms_csv(const std::vector<NormsRow>& rows, int m);

struct ProductOutcome {
    AnySymbol result;
    double disagreement = 0.0;
    std::string route;  // "exact" or the numeric oracle name
};

ProductOutcome compute_product(const AnySymbol& f, const AnySymbol& g, const RunConfig& cfg);

}  // namespace rieffel
