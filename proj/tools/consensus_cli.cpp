// Command-line front end: scenario ingestion -> analysis / simulation /
// oracle verification / bound study, with byte-stable JSON and CSV artifacts.
//
// Exit codes: 0 success, 1 any library error (message on stderr),
// 2 verification failure (closed forms disagreed with the oracle).

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "consensus/analysis.hpp"
#include "consensus/io.hpp"
#include "consensus/montecarlo.hpp"
#include "consensus/oracle.hpp"

namespace {

struct CommonOptions {
    std::string scenario_path;
    std::string out_dir;
    std::optional<long> trials;
    std::optional<std::uint64_t> seed;
    std::optional<double> tol;
    int bins = 20;
    int workers = 0;
    bool allow_large = false;
    bool relaxed_probs = false;
};

consensus::Scenario load_scenario(const CommonOptions& opt) {
    consensus::Scenario sc = consensus::io::parse_scenario_file(opt.scenario_path,
                                                                opt.relaxed_probs);
    if (opt.trials) sc.trials = *opt.trials;
    if (opt.seed) sc.master_seed = *opt.seed;
    if (opt.tol) sc.tol = *opt.tol;
    consensus::validate_scenario(sc);
    return sc;
}

consensus::KronBudget budget_for(const CommonOptions& opt) {
    consensus::KronBudget budget;
    if (opt.allow_large) budget.max_n = consensus::kron_hard_cap;
    return budget;
}

std::string out_path(const CommonOptions& opt, const std::string& name) {
    return (std::filesystem::path(opt.out_dir) / name).string();
}

int cmd_analyze(const CommonOptions& opt) {
    const consensus::Scenario sc = load_scenario(opt);
    const consensus::AnalysisReport report =
        consensus::analyze(sc.graph, sc.initial, budget_for(opt));
    consensus::io::write_file(out_path(opt, "report.json"),
                              consensus::io::analysis_report_json(report));
    std::cout << "analyze: wrote " << out_path(opt, "report.json") << "\n";
    return 0;
}

int cmd_simulate(const CommonOptions& opt) {
    const consensus::Scenario sc = load_scenario(opt);
    const consensus::EnsembleStats stats = consensus::run_ensemble(sc, opt.workers, opt.bins);
    consensus::io::write_file(out_path(opt, "ensemble.csv"), consensus::io::ensemble_csv(stats));
    consensus::io::write_file(out_path(opt, "histogram.csv"),
                              consensus::io::histogram_csv(stats));
    consensus::io::write_file(out_path(opt, "summary.json"), consensus::io::summary_json(stats));
    std::cout << "simulate: " << stats.converged << "/" << stats.trials
              << " trials converged; wrote ensemble.csv, histogram.csv, summary.json in "
              << opt.out_dir << "\n";
    return 0;
}

int cmd_verify(const CommonOptions& opt, double verify_tol) {
    std::vector<consensus::oracle::OracleReport> reports =
        consensus::oracle::run_corpus_sweep(verify_tol, /*throw_on_failure=*/false);
    if (!opt.scenario_path.empty()) {
        const consensus::Scenario sc = load_scenario(opt);
        if (static_cast<int>(sc.graph.directed_pairs.size()) <=
            consensus::oracle::max_directed_edges) {
            const consensus::KronBudget oracle_budget{sc.graph.n};
            reports.push_back(consensus::oracle::compare_against_enumeration(
                sc.graph, consensus::expected_operators<double>(sc.graph, oracle_budget),
                verify_tol, /*throw_on_failure=*/false));
        } else {
            std::cerr << "verify: scenario graph exceeds the enumeration budget ("
                      << sc.graph.directed_pairs.size() << " directed edges > "
                      << consensus::oracle::max_directed_edges << "); skipped\n";
        }
    }

    const std::string rendered = consensus::io::oracle_reports_json(reports);
    std::cout << rendered;
    if (!opt.out_dir.empty())
        consensus::io::write_file(out_path(opt, "oracle_report.json"), rendered);

    long failed = 0;
    for (const auto& r : reports)
        if (!r.pass) ++failed;
    std::cerr << "verify: " << (reports.size() - static_cast<std::size_t>(failed)) << "/"
              << reports.size() << " instances passed at tol " << verify_tol << "\n";
    if (failed > 0)
        throw consensus::VerificationFailure(std::to_string(failed) +
                                             " instance(s) disagreed with the enumeration oracle");
    return 0;
}

int cmd_bound_study(const CommonOptions& opt) {
    const consensus::Scenario sc = load_scenario(opt);
    const consensus::KronBudget budget = budget_for(opt);
    consensus::io::BoundStudy study;
    study.report = consensus::analyze(sc.graph, sc.initial, budget);
    const consensus::VarianceReport& v = study.report.variance;
    if (v.v1_r.size() > 0) {
        study.link_v1_gap =
            v.bound_term_a * (v.v1_r - v.v1_q).cwiseAbs().maxCoeff();
        if (v.kappa_exact)
            study.link_kappa = v.bound_term_a * *v.kappa_exact * v.bound_term_b;
    }
    consensus::io::write_file(out_path(opt, "bound_terms.json"),
                              consensus::io::bound_terms_json(study));
    std::cout << "bound-study: wrote " << out_path(opt, "bound_terms.json") << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"consensus over switching directed random graphs: analysis, simulation, "
                 "verification, bound study"};
    app.require_subcommand(1);

    CommonOptions opt;
    double verify_tol = 1e-12;

    auto add_common = [&](CLI::App* cmd, bool scenario_required) {
        auto* s = cmd->add_option("--scenario", opt.scenario_path, "scenario JSON file");
        if (scenario_required) s->required();
        cmd->add_option("--out", opt.out_dir, "output directory");
        cmd->add_flag("--allow-large", opt.allow_large,
                      "lift the Kronecker budget to the hard cap");
        cmd->add_flag("--relaxed-probs", opt.relaxed_probs,
                      "permit p = 1 (oracle/test graphs)");
    };

    CLI::App* analyze = app.add_subcommand("analyze", "closed-form analysis report");
    add_common(analyze, true);
    analyze->get_option("--out")->required();

    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo ensemble");
    add_common(simulate, true);
    simulate->get_option("--out")->required();
    simulate->add_option("--trials", [&opt](const std::vector<std::string>& vals) {
        opt.trials = std::stol(vals.front());
        return true;
    }, "override scenario trial count");
    simulate->add_option("--seed", [&opt](const std::vector<std::string>& vals) {
        opt.seed = std::stoull(vals.front());
        return true;
    }, "override scenario master seed");
    simulate->add_option("--tol", [&opt](const std::vector<std::string>& vals) {
        opt.tol = std::stod(vals.front());
        return true;
    }, "override convergence tolerance");
    simulate->add_option("--bins", opt.bins, "histogram bin count");
    simulate->add_option("--workers", opt.workers, "worker thread count (0 = hardware)");

    CLI::App* verify = app.add_subcommand(
        "verify", "exhaustive-enumeration check of every closed form");
    add_common(verify, false);
    verify->add_option("--tol", verify_tol, "verification tolerance");

    CLI::App* bound = app.add_subcommand("bound-study", "variance bound decomposition");
    add_common(bound, true);
    bound->get_option("--out")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(analyze)) return cmd_analyze(opt);
        if (app.got_subcommand(simulate)) return cmd_simulate(opt);
        if (app.got_subcommand(verify)) return cmd_verify(opt, verify_tol);
        if (app.got_subcommand(bound)) return cmd_bound_study(opt);
    } catch (const consensus::VerificationFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const consensus::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
