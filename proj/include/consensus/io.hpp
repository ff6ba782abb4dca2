#pragma once

#include <string>

#include "consensus/analysis.hpp"
#include "consensus/graph.hpp"
#include "consensus/montecarlo.hpp"
#include "consensus/oracle.hpp"
#include "consensus/random_net.hpp"

namespace consensus::io {

// Shortest exact decimal form of a double ("%.17g"): round-trips bit-exactly
// and is byte-stable across runs, which every emitted artifact relies on.
std::string fmt_double(double value);

// --- scenario ingestion ---------------------------------------------------------
//
// Scenario JSON schema:
//   {
//     "nodes": n,
//     "edges": [[u, v], ...],                       // 0-based, unordered pairs
//     "probs": [p0, ...] | {"rule": ..., "args": {...}},
//     "initial": [x0, ...] | {"rule": "linear_i_over_n"},
//     "trials": t, "seed": s, "tol": e, "max_steps": m   // all optional
//   }
// Prob rules: "uniform" (args: p) and "scaled_inverse_degree" (args: scale,
// leaf_p, optional basis "full_degree" | "follower_count") -- degree-1 nodes
// take leaf_p, every other node takes scale / basis-degree. The initial rule
// "linear_i_over_n" expands to x_i(0) = (i + 1) / n.
//
// Malformed syntax / missing keys / wrong types -> ParseError with context;
// well-formed but invalid values -> ValidationError (InvalidProbability etc.).
Scenario parse_scenario_json(const std::string& text, bool relaxed_probs = false,
                             const std::string& origin = "<string>");
Scenario parse_scenario_file(const std::string& path, bool relaxed_probs = false);

// --- emitters --------------------------------------------------------------------
// All emitters produce fixed key order, "%.17g" floats, '\n' line endings.

std::string graph_json(const CandidateGraph& graph);
std::string analysis_report_json(const AnalysisReport& report);
std::string ensemble_csv(const EnsembleStats& stats);
std::string histogram_csv(const EnsembleStats& stats);
std::string summary_json(const EnsembleStats& stats);

struct BoundStudy {
    AnalysisReport report;
    // A * ||v1(R) - v1(Q)||_inf and A * kappa * ||Delta||_inf, present when
    // the Kronecker pieces were computed.
    std::optional<double> link_v1_gap;
    std::optional<double> link_kappa;
};

std::string bound_terms_json(const BoundStudy& study);
std::string oracle_report_json(const oracle::OracleReport& report);
std::string oracle_reports_json(const std::vector<oracle::OracleReport>& reports);

// Debug dump of one realization: "u v" per active directed edge, lex order.
std::string realization_edge_list(const DirectedRealization& realization);

// Row-major full-precision CSV of a dense matrix.
std::string matrix_csv(const Eigen::MatrixXd& matrix);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

} // namespace consensus::io
