/*
 * rieffel: command-line front end.
 *
 *   rieffel product F G --out P [--config C]
 *   rieffel norms F [--theta-sweep a:s:b] [--out CSV] [--config C]
 *   rieffel verify [--suites a,b] [--workers W] [--out JSON] [--config C]
 *   rieffel info [--config C]
 *
 * Exit status: 0 pass, 1 check failure, 2 I/O or parse error, 3 usage.
 */
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "rieffel/verify.hpp"

using namespace rieffel;

namespace {

enum Exit { kPass = 0, kCheckFailed = 1, kIoError = 2, kUsage = 3 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream in(s);
    for (std::string item; std::getline(in, item, ',');) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text)) throw ParseError("cannot write " + path);
}

int cmd_product(const RunConfig& cfg, const std::string& f, const std::string& g, const std::string& out) {
    if (out.empty()) throw UsageError("product needs --out");
    ProductOutcome r = compute_product(load_symbol(f), load_symbol(g), cfg);
    save_symbol(out, r.result);
    std::cout << "route " << r.route << " disagreement " << r.disagreement << "\n";
    return kPass;
}

int cmd_norms(const RunConfig& cfg, const std::string& f, const std::vector<double>& thetas, const std::string& out) {
    AnySymbol sym = load_symbol(f);
    std::vector<NormsRow> rows;
    int status = kPass;
    for (double theta : thetas) {
        rows.push_back(compute_norms(sym, cfg, theta));
        const NormsRow& r = rows.back();
        if (theta == 0.0 && std::abs(r.sup_norm - r.op_norm) > 0.02 * r.sup_norm) {
            std::cerr << "theta = 0: sup_norm " << r.sup_norm << " and op_norm " << r.op_norm << " differ by more than 2%\n";
            status = kCheckFailed;
        }
    }
    write_text(out, norms_csv(rows, cfg.m));
    return status;
}

int cmd_verify(const RunConfig& cfg, const std::vector<std::string>& suites, const std::string& out) {
    for (const auto& s : suites)
        if (!is_suite(s)) throw UsageError("unknown suite '" + s + "'");
    std::vector<SuiteReport> reports = run_suites(suites, cfg, cfg.workers);
    write_text(out, report_json(reports, cfg).dump(2) + "\n");
    bool ok = true;
    for (const auto& r : reports) {
        std::cerr << (r.ok() ? "PASS " : "FAIL ") << r.suite << "  " << r.passed() << "/" << r.checks.size() << "\n";
        for (const auto& c : r.checks)
            if (!c.pass) std::cerr << "     " << c.claim << ": " << c.measured << " > " << c.bound << " " << c.note << "\n";
        ok = ok && r.ok();
    }
    return ok ? kPass : kCheckFailed;
}

int cmd_info(const RunConfig& cfg) {
    std::cout << "rieffel verification toolkit, report schema " << kReportSchemaVersion << "\n";
    std::cout << "config " << cfg.to_json().dump() << "\n";
    std::cout << "suites:\n";
    for (const auto& s : suite_catalog())
        std::cout << "  " << s.name << "  [" << s.criterion << "] " << s.anchor << ": " << s.summary << "\n";
    return kPass;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deformed products, pseudodifferential operators and their norms"};
    app.require_subcommand(1);
    std::string config, out, suites, sweep, f, g;
    int workers = 0;

    auto common = [&](CLI::App* sc) { sc->add_option("--config", config, "key = value configuration file"); };
    CLI::App* product = app.add_subcommand("product", "deformed product of two symbol files");
    common(product);
    product->add_option("f", f, "left symbol (RSYM1 or plane-wave JSON)")->required();
    product->add_option("g", g, "right symbol")->required();
    product->add_option("--out", out, "output symbol path");

    CLI::App* norms = app.add_subcommand("norms", "sup, operator and differential norms over a theta sweep");
    common(norms);
    norms->add_option("f", f, "symbol (RSYM1 or plane-wave JSON)")->required();
    norms->add_option("--theta-sweep", sweep, "start:step:end");
    norms->add_option("--out", out, "CSV path (default: config csv, else stdout)");

    CLI::App* verify = app.add_subcommand("verify", "run verification suites");
    common(verify);
    verify->add_option("--suites", suites, "comma-separated suite names (default: all)");
    verify->add_option("--workers", workers, "suites run concurrently");
    verify->add_option("--out", out, "JSON report path (default: config out, else stdout)");

    CLI::App* info = app.add_subcommand("info", "suite catalog and effective configuration");
    common(info);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kPass : kUsage;
    }

    try {
        RunConfig cfg;
        try {
            cfg = config.empty() ? RunConfig{} : RunConfig::load(config);
        } catch (const InvalidInputError& e) {
            throw ParseError(config + ": " + e.what());
        }
        if (verify->parsed() && workers != 0) {
            if (workers < 0) throw UsageError("--workers must be positive");
            cfg.workers = workers;
        }
        if (product->parsed()) return cmd_product(cfg, f, g, out.empty() ? cfg.out : out);
        if (norms->parsed()) {
            std::vector<double> thetas = cfg.thetas;
            if (!sweep.empty()) {
                try {
                    thetas = ThetaSweep::parse(sweep).values();
                } catch (const ParseError& e) {
                    throw UsageError(std::string("--theta-sweep: ") + e.what());
                }
            }
            return cmd_norms(cfg, f, thetas, out.empty() ? cfg.csv : out);
        }
        if (verify->parsed())
            return cmd_verify(cfg, suites.empty() ? cfg.suites : split_list(suites), out.empty() ? cfg.out : out);
        return cmd_info(cfg);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const ParseError& e) {
        std::cerr << e.what() << "\n";
        return kIoError;
    } catch (const InvalidInputError& e) {
        std::cerr << e.what() << "\n";
        return kIoError;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kCheckFailed;
    }
}
