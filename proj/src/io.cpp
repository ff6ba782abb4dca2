#include "consensus/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace consensus::io {

namespace {

using nlohmann::json;

[[noreturn]] void parse_fail(const std::string& origin, const std::string& what) {
    throw ParseError(origin + ": " + what);
}

const json& require_key(const json& obj, const char* key, const std::string& origin) {
    const auto it = obj.find(key);
    if (it == obj.end()) parse_fail(origin, std::string("missing key \"") + key + "\"");
    return *it;
}

double as_number(const json& j, const std::string& context, const std::string& origin) {
    if (!j.is_number()) parse_fail(origin, context + " must be a number");
    return j.get<double>();
}

long as_integer(const json& j, const std::string& context, const std::string& origin) {
    if (!j.is_number_integer()) parse_fail(origin, context + " must be an integer");
    return j.get<long>();
}

Eigen::VectorXd as_double_vector(const json& j, Index expected, const std::string& context,
                                 const std::string& origin) {
    if (!j.is_array()) parse_fail(origin, context + " must be an array");
    if (static_cast<Index>(j.size()) != expected)
        parse_fail(origin, context + " must have length " + std::to_string(expected) + ", got " +
                               std::to_string(j.size()));
    Eigen::VectorXd v(expected);
    for (Index i = 0; i < expected; ++i)
        v[i] = as_number(j[static_cast<std::size_t>(i)],
                         context + "[" + std::to_string(i) + "]", origin);
    return v;
}

Eigen::VectorXd resolve_probs(const json& spec, Index n,
                              const std::vector<std::pair<Index, Index>>& edges,
                              const std::string& origin) {
    if (spec.is_array()) return as_double_vector(spec, n, "probs", origin);
    if (!spec.is_object()) parse_fail(origin, "probs must be an array or a rule object");

    const json& rule_json = require_key(spec, "rule", origin);
    if (!rule_json.is_string()) parse_fail(origin, "probs.rule must be a string");
    const std::string rule = rule_json.get<std::string>();
    const json args = spec.contains("args") ? spec["args"] : json::object();
    if (!args.is_object()) parse_fail(origin, "probs.args must be an object");

    if (rule == "uniform") {
        const double p = as_number(require_key(args, "p", origin), "probs.args.p", origin);
        return Eigen::VectorXd::Constant(n, p);
    }
    if (rule == "scaled_inverse_degree") {
        const double scale =
            as_number(require_key(args, "scale", origin), "probs.args.scale", origin);
        const double leaf_p =
            as_number(require_key(args, "leaf_p", origin), "probs.args.leaf_p", origin);
        DegreeBasis basis = DegreeBasis::full_degree;
        if (args.contains("basis")) {
            if (!args["basis"].is_string()) parse_fail(origin, "probs.args.basis must be a string");
            const std::string name = args["basis"].get<std::string>();
            if (name == "full_degree")
                basis = DegreeBasis::full_degree;
            else if (name == "follower_count")
                basis = DegreeBasis::follower_count;
            else
                parse_fail(origin, "unknown probs.args.basis \"" + name + "\"");
        }

        Eigen::VectorXi degree = Eigen::VectorXi::Zero(n);
        for (const auto& [u, v] : edges) {
            if (u >= 0 && u < n) degree[u] += 1;
            if (v >= 0 && v < n) degree[v] += 1;
        }
        Eigen::VectorXi leaf_neighbors = Eigen::VectorXi::Zero(n);
        for (const auto& [u, v] : edges) {
            if (u < 0 || u >= n || v < 0 || v >= n) continue;
            if (degree[v] == 1) leaf_neighbors[u] += 1;
            if (degree[u] == 1) leaf_neighbors[v] += 1;
        }

        Eigen::VectorXd probs(n);
        for (Index v = 0; v < n; ++v) {
            if (degree[v] <= 1) {
                probs[v] = leaf_p;
                continue;
            }
            const Index denom = basis == DegreeBasis::full_degree ? Index(degree[v])
                                                                  : Index(leaf_neighbors[v]);
            if (denom < 1)
                throw InvalidProbability("scaled_inverse_degree with follower_count basis: node " +
                                         std::to_string(v) + " has no leaf neighbors");
            probs[v] = scale / static_cast<double>(denom);
        }
        return probs;
    }
    parse_fail(origin, "unknown probs rule \"" + rule + "\"");
}

Eigen::VectorXd resolve_initial(const json& spec, Index n, const std::string& origin) {
    if (spec.is_array()) return as_double_vector(spec, n, "initial", origin);
    if (!spec.is_object()) parse_fail(origin, "initial must be an array or a rule object");
    const json& rule = require_key(spec, "rule", origin);
    if (!rule.is_string()) parse_fail(origin, "initial.rule must be a string");
    if (rule.get<std::string>() == "linear_i_over_n") {
        Eigen::VectorXd x0(n);
        for (Index i = 0; i < n; ++i)
            x0[i] = static_cast<double>(i + 1) / static_cast<double>(n);
        return x0;
    }
    parse_fail(origin, "unknown initial rule \"" + rule.get<std::string>() + "\"");
}

std::string complex_pair(const std::complex<double>& z) {
    return "[" + fmt_double(z.real()) + ", " + fmt_double(z.imag()) + "]";
}

std::string double_array(const Eigen::VectorXd& v) {
    std::string out = "[";
    for (Index i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += fmt_double(v[i]);
    }
    return out + "]";
}

// JSON has no non-finite numbers; an overflowed bound serializes as null.
std::string json_number(double v) {
    return std::isfinite(v) ? fmt_double(v) : std::string("null");
}

std::string opt_double(const std::optional<double>& v) {
    return v ? json_number(*v) : std::string("null");
}

} // namespace

std::string fmt_double(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

Scenario parse_scenario_json(const std::string& text, bool relaxed_probs,
                             const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        parse_fail(origin, e.what());
    }
    if (!doc.is_object()) parse_fail(origin, "top level must be an object");

    const long nodes = as_integer(require_key(doc, "nodes", origin), "nodes", origin);
    if (nodes < 1) parse_fail(origin, "nodes must be positive");
    const Index n = static_cast<Index>(nodes);

    const json& edges_json = require_key(doc, "edges", origin);
    if (!edges_json.is_array()) parse_fail(origin, "edges must be an array of [u, v] pairs");
    std::vector<std::pair<Index, Index>> edges;
    edges.reserve(edges_json.size());
    for (std::size_t k = 0; k < edges_json.size(); ++k) {
        const json& e = edges_json[k];
        const std::string context = "edges[" + std::to_string(k) + "]";
        if (!e.is_array() || e.size() != 2) parse_fail(origin, context + " must be a [u, v] pair");
        edges.emplace_back(static_cast<Index>(as_integer(e[0], context + "[0]", origin)),
                           static_cast<Index>(as_integer(e[1], context + "[1]", origin)));
    }

    const Eigen::VectorXd probs =
        resolve_probs(require_key(doc, "probs", origin), n, edges, origin);

    Scenario sc;
    sc.graph = build_graph(edges, probs, relaxed_probs);
    sc.initial = resolve_initial(require_key(doc, "initial", origin), n, origin);
    if (doc.contains("trials")) sc.trials = as_integer(doc["trials"], "trials", origin);
    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_integer() && !doc["seed"].is_number_unsigned())
            parse_fail(origin, "seed must be an integer");
        sc.master_seed = doc["seed"].get<std::uint64_t>();
    }
    if (doc.contains("tol")) sc.tol = as_number(doc["tol"], "tol", origin);
    if (doc.contains("max_steps")) sc.max_steps = as_integer(doc["max_steps"], "max_steps", origin);

    validate_scenario(sc);
    return sc;
}

Scenario parse_scenario_file(const std::string& path, bool relaxed_probs) {
    return parse_scenario_json(read_file(path), relaxed_probs, path);
}

std::string graph_json(const CandidateGraph& graph) {
    std::string out = "{\n  \"nodes\": " + std::to_string(graph.n) + ",\n  \"edges\": [";
    bool first = true;
    for (const auto& [u, v] : graph.directed_pairs) {
        if (u > v) continue;
        if (!first) out += ", ";
        out += "[" + std::to_string(u) + ", " + std::to_string(v) + "]";
        first = false;
    }
    out += "],\n  \"probs\": " + double_array(graph.probs) + ",\n  \"degrees\": [";
    for (Index i = 0; i < graph.n; ++i)
        out += (i ? ", " : "") + std::to_string(graph.degrees[i]);
    out += "]\n}\n";
    return out;
}

std::string analysis_report_json(const AnalysisReport& report) {
    std::string out = "{\n";
    out += "  \"n\": " + std::to_string(report.n) + ",\n";
    out += "  \"probs\": " + double_array(report.probs) + ",\n";
    out += "  \"mean\": " + fmt_double(report.variance.mean) + ",\n";
    out += "  \"exact_variance\": " + opt_double(report.variance.exact_variance) + ",\n";
    out += "  \"exact_variance_raw\": " + opt_double(report.variance.exact_variance_raw) + ",\n";
    out += "  \"bound_term_a\": " + json_number(report.variance.bound_term_a) + ",\n";
    out += "  \"bound_term_b\": " + json_number(report.variance.bound_term_b) + ",\n";
    out += "  \"bound_term_c\": " + json_number(report.variance.bound_term_c) + ",\n";
    out += "  \"bound_total\": " + json_number(report.variance.bound_total) + ",\n";
    out += "  \"kappa_exact\": " + opt_double(report.variance.kappa_exact) + ",\n";
    out += "  \"slem\": " + fmt_double(report.spectral.slem) + ",\n";
    out += "  \"eigenvalues\": [";
    for (Index k = 0; k < report.spectral.eigenvalues.size(); ++k) {
        if (k) out += ", ";
        out += complex_pair(report.spectral.eigenvalues[k]);
    }
    out += "],\n";
    out += "  \"weights\": " + double_array(report.weights.v1_ew) + "\n";
    out += "}\n";
    return out;
}

std::string ensemble_csv(const EnsembleStats& stats) {
    std::string out = "trial,consensus_value,steps,converged\n";
    for (std::size_t t = 0; t < stats.results.size(); ++t) {
        const TrajectoryResult& r = stats.results[t];
        out += std::to_string(t) + "," + fmt_double(r.consensus_value) + "," +
               std::to_string(r.steps) + "," + (r.converged ? "1" : "0") + "\n";
    }
    return out;
}

std::string histogram_csv(const EnsembleStats& stats) {
    std::string out = "bin_lower,bin_upper,count\n";
    for (const HistogramBin& bin : stats.histogram)
        out += fmt_double(bin.lower) + "," + fmt_double(bin.upper) + "," +
               std::to_string(bin.count) + "\n";
    return out;
}

std::string summary_json(const EnsembleStats& stats) {
    std::string out = "{\n";
    out += "  \"trials\": " + std::to_string(stats.trials) + ",\n";
    out += "  \"converged\": " + std::to_string(stats.converged) + ",\n";
    out += "  \"mean\": " + fmt_double(stats.mean) + ",\n";
    out += "  \"std\": " + fmt_double(stats.std) + "\n";
    out += "}\n";
    return out;
}

std::string bound_terms_json(const BoundStudy& study) {
    const VarianceReport& v = study.report.variance;
    std::optional<double> ratio;
    if (v.exact_variance && *v.exact_variance > 0.0) ratio = v.bound_total / *v.exact_variance;
    std::string out = "{\n";
    out += "  \"bound_term_a\": " + json_number(v.bound_term_a) + ",\n";
    out += "  \"bound_term_b\": " + json_number(v.bound_term_b) + ",\n";
    out += "  \"bound_term_c\": " + json_number(v.bound_term_c) + ",\n";
    out += "  \"bound_total\": " + json_number(v.bound_total) + ",\n";
    out += "  \"link_v1_gap\": " + opt_double(study.link_v1_gap) + ",\n";
    out += "  \"link_kappa\": " + opt_double(study.link_kappa) + ",\n";
    out += "  \"kappa_exact\": " + opt_double(v.kappa_exact) + ",\n";
    out += "  \"exact_variance\": " + opt_double(v.exact_variance) + ",\n";
    out += "  \"bound_over_exact\": " + opt_double(ratio) + "\n";
    out += "}\n";
    return out;
}

std::string oracle_report_json(const oracle::OracleReport& report) {
    std::string out = "{";
    out += "\"graph_id\": \"" + report.graph_id + "\", ";
    out += "\"n\": " + std::to_string(report.n) + ", ";
    out += "\"cases_checked\": " + std::to_string(report.cases_checked) + ", ";
    out += "\"tol\": " + fmt_double(report.tol) + ", ";
    out += "\"max_err_ew\": " + fmt_double(report.max_err_ew) + ", ";
    out += "\"max_err_r\": " + fmt_double(report.max_err_r) + ", ";
    out += "\"max_err_delta\": " + fmt_double(report.max_err_delta) + ", ";
    out += "\"max_err_delta_norm\": " + fmt_double(report.max_err_delta_norm) + ", ";
    out += "\"max_err_mean\": " + fmt_double(report.max_err_mean) + ", ";
    out += "\"max_err_variance\": " + fmt_double(report.max_err_variance) + ", ";
    out += std::string("\"pass\": ") + (report.pass ? "true" : "false");
    out += "}";
    return out;
}

std::string oracle_reports_json(const std::vector<oracle::OracleReport>& reports) {
    std::string out = "[\n";
    for (std::size_t k = 0; k < reports.size(); ++k)
        out += "  " + oracle_report_json(reports[k]) + (k + 1 < reports.size() ? ",\n" : "\n");
    out += "]\n";
    return out;
}

std::string realization_edge_list(const DirectedRealization& realization) {
    std::string out;
    const Index n = realization.adjacency.rows();
    for (Index u = 0; u < n; ++u)
        for (Index v = 0; v < n; ++v)
            if (realization.adjacency(u, v) != 0)
                out += std::to_string(u) + " " + std::to_string(v) + "\n";
    return out;
}

std::string matrix_csv(const Eigen::MatrixXd& matrix) {
    std::string out;
    for (Index i = 0; i < matrix.rows(); ++i) {
        for (Index j = 0; j < matrix.cols(); ++j) {
            if (j) out += ",";
            out += fmt_double(matrix(i, j));
        }
        out += "\n";
    }
    return out;
}

void write_file(const std::string& path, const std::string& content) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << content;
    if (!out) throw Error("failed writing " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path + ": cannot open file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace consensus::io
