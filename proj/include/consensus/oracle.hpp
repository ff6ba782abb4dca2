#pragma once

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "consensus/analysis.hpp"
#include "consensus/errors.hpp"
#include "consensus/graph.hpp"
#include "consensus/moments.hpp"
#include "consensus/random_net.hpp"

namespace consensus::oracle {

namespace detail {

// Compensated (Kahan) matrix accumulator: enumeration sums thousands of
// realization terms and the 1e-12 comparison gates want the cross-platform
// determinism of compensated addition.
struct KahanMatrix {
    Eigen::MatrixXd sum;
    Eigen::MatrixXd comp;

    explicit KahanMatrix(Index rows, Index cols)
        : sum(Eigen::MatrixXd::Zero(rows, cols)), comp(Eigen::MatrixXd::Zero(rows, cols)) {}

    void add(const Eigen::MatrixXd& value) {
        for (Index j = 0; j < sum.cols(); ++j) {
            for (Index i = 0; i < sum.rows(); ++i) {
                const double y = value(i, j) - comp(i, j);
                const double t = sum(i, j) + y;
                comp(i, j) = (t - sum(i, j)) - y;
                sum(i, j) = t;
            }
        }
    }
};

} // namespace detail

inline constexpr int max_directed_edges = 20; // enumeration cap: 2^{2|E_c|} realizations

struct Enumerated {
    Eigen::MatrixXd ew;      // exact E W
    Eigen::MatrixXd r_kron;  // exact E[W (x) W]
    double weight_sum = 0.0; // sums to 1 over all realizations
    long cases = 0;          // 2^{2|E_c|}
};

// Exact expectations by brute force: every subset of the candidate directed
// edges is one realization, weighted by the product of p_v / (1 - p_v) over
// present/absent edges. Directed edges are indexed by their position in the
// graph's lexicographic pair list, so realization k has edge b present iff
// bit b of k is set.
inline Enumerated enumerate_expectations(const CandidateGraph& graph) {
    const int m = static_cast<int>(graph.directed_pairs.size());
    if (m > max_directed_edges)
        throw TooLarge("enumeration needs 2|E_c| <= " + std::to_string(max_directed_edges) +
                       " directed edges, got " + std::to_string(m));

    const Index n = graph.n;
    detail::KahanMatrix ew_acc(n, n);
    detail::KahanMatrix r_acc(n * n, n * n);
    double weight_sum = 0.0, weight_comp = 0.0;

    DirectedRealization real;
    Eigen::MatrixXd kron(n * n, n * n);
    const std::uint64_t total = std::uint64_t(1) << m;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
        real.adjacency = Eigen::MatrixXi::Zero(n, n);
        real.in_degrees = Eigen::VectorXi::Zero(n);
        double weight = 1.0;
        for (int b = 0; b < m; ++b) {
            const auto& [u, v] = graph.directed_pairs[static_cast<std::size_t>(b)];
            if (mask >> b & 1) {
                weight *= graph.probs[v];
                real.adjacency(u, v) = 1;
                real.in_degrees[v] += 1;
            } else {
                weight *= 1.0 - graph.probs[v];
            }
        }
        if (weight == 0.0) continue; // relaxed p = 1: absent-edge branches carry no mass

        const Eigen::MatrixXd w = weight_matrix<double>(real);
        ew_acc.add(weight * w);
        for (Index i = 0; i < n; ++i)
            for (Index r = 0; r < n; ++r)
                for (Index j = 0; j < n; ++j)
                    for (Index s = 0; s < n; ++s)
                        kron(kron_index(i, r, n), kron_index(j, s, n)) = w(i, j) * w(r, s);
        r_acc.add(weight * kron);

        const double y = weight - weight_comp;
        const double t = weight_sum + y;
        weight_comp = (t - weight_sum) - y;
        weight_sum = t;
    }

    Enumerated e;
    e.ew = ew_acc.sum;
    e.r_kron = r_acc.sum;
    e.weight_sum = weight_sum;
    e.cases = static_cast<long>(total);
    return e;
}

struct OracleReport {
    std::string graph_id;
    Index n = 0;
    long cases_checked = 0;
    double tol = 0.0;
    double max_err_ew = 0.0;         // closed E W vs enumerated
    double max_err_r = 0.0;          // closed R vs enumerated
    double max_err_delta = 0.0;      // closed Delta vs enumerated R - EW (x) EW
    double max_err_delta_norm = 0.0; // max_i S_i vs enumerated ||Delta||_inf
    double max_err_mean = 0.0;       // closed-form mean vs enumerated stationary mean
    double max_err_variance = 0.0;   // closed variance vs enumerated variance
    bool pass = false;
};

inline std::string describe_graph(const CandidateGraph& graph) {
    std::ostringstream out;
    out << "n" << graph.n << "/e";
    bool first = true;
    for (const auto& [u, v] : graph.directed_pairs) {
        if (u > v) continue;
        out << (first ? "" : ",") << u << "-" << v;
        first = false;
    }
    out << "/p";
    for (Index i = 0; i < graph.n; ++i) out << (i ? "," : "") << graph.probs[i];
    return out.str();
}

// Compares the closed forms in `ops` (plus the closed-form mean and the exact
// variance, both recomputed from the graph) against exhaustive enumeration.
// Exposed separately from verify_closed_forms so tests can feed deliberately
// corrupted closed forms through the same comparison.
inline OracleReport compare_against_enumeration(const CandidateGraph& graph,
                                                const ExpectedOperators<double>& ops, double tol,
                                                bool throw_on_failure) {
    const Enumerated e = enumerate_expectations(graph);
    if (std::abs(e.weight_sum - 1.0) > 1e-12)
        throw VerificationFailure("enumeration weights sum to " + std::to_string(e.weight_sum));

    OracleReport report;
    report.graph_id = describe_graph(graph);
    report.n = graph.n;
    report.cases_checked = e.cases;
    report.tol = tol;

    const Index n = graph.n;
    Eigen::MatrixXd q_enum(n * n, n * n);
    for (Index i = 0; i < n; ++i)
        for (Index r = 0; r < n; ++r)
            for (Index j = 0; j < n; ++j)
                for (Index s = 0; s < n; ++s)
                    q_enum(kron_index(i, r, n), kron_index(j, s, n)) = e.ew(i, j) * e.ew(r, s);
    const Eigen::MatrixXd delta_enum = e.r_kron - q_enum;

    report.max_err_ew = (ops.ew - e.ew).cwiseAbs().maxCoeff();
    report.max_err_r = (ops.r_kron - e.r_kron).cwiseAbs().maxCoeff();
    report.max_err_delta = (ops.delta - delta_enum).cwiseAbs().maxCoeff();
    const double enum_norm = delta_enum.cwiseAbs().rowwise().sum().maxCoeff();
    report.max_err_delta_norm = std::abs(ops.s_values.maxCoeff() - enum_norm);

    // Mean and variance against stationary distributions of the enumerated
    // matrices, with the canonical ramp initial condition.
    Eigen::VectorXd x0(n);
    for (Index i = 0; i < n; ++i) x0[i] = static_cast<double>(i + 1) / static_cast<double>(n);
    const double mean_closed = expected_consensus_value<double>(graph, x0);
    const double mean_enum = x0.dot(stationary_distribution(e.ew));
    report.max_err_mean = std::abs(mean_closed - mean_enum);

    const KronBudget oracle_budget{graph.n};
    const VarianceReport var_closed = exact_variance(graph, x0, oracle_budget);
    const double var_enum = consensus::detail::kron_vector(x0).dot(
                                stationary_distribution(e.r_kron)) -
                            mean_enum * mean_enum;
    report.max_err_variance = std::abs(*var_closed.exact_variance_raw - var_enum);

    report.pass = report.max_err_ew <= tol && report.max_err_r <= tol &&
                  report.max_err_delta <= tol && report.max_err_delta_norm <= tol &&
                  report.max_err_mean <= tol && report.max_err_variance <= tol;
    if (!report.pass && throw_on_failure) {
        std::ostringstream msg;
        msg << "closed forms disagree with enumeration on " << report.graph_id
            << " (tol " << tol << "): ew " << report.max_err_ew << ", r " << report.max_err_r
            << ", delta " << report.max_err_delta << ", delta_norm " << report.max_err_delta_norm
            << ", mean " << report.max_err_mean << ", variance " << report.max_err_variance;
        throw VerificationFailure(msg.str());
    }
    return report;
}

// Ground-truth gate: recomputes every closed form for `graph` and insists the
// enumeration agrees within tol. Throws VerificationFailure (with the worst
// offenders in the message) on any disagreement.
inline OracleReport verify_closed_forms(const CandidateGraph& graph, double tol = 1e-12) {
    const KronBudget oracle_budget{graph.n};
    return compare_against_enumeration(graph, expected_operators<double>(graph, oracle_budget),
                                       tol, /*throw_on_failure=*/true);
}

// --- built-in small-graph corpus ----------------------------------------------

// Every connected labeled graph on 2..4 nodes, each with five probability
// assignments from the {0.25, 0.5, 0.75} grid (three uniform plus two mixed
// rotations). 215 instances total.
inline std::vector<CandidateGraph> small_graph_corpus() {
    static const double grid[3] = {0.25, 0.5, 0.75};
    std::vector<CandidateGraph> corpus;
    for (Index n = 2; n <= 4; ++n) {
        std::vector<std::pair<Index, Index>> all_pairs;
        for (Index u = 0; u < n; ++u)
            for (Index v = u + 1; v < n; ++v) all_pairs.emplace_back(u, v);
        const std::uint32_t subsets = std::uint32_t(1) << all_pairs.size();
        for (std::uint32_t mask = 1; mask < subsets; ++mask) {
            std::vector<std::pair<Index, Index>> edges;
            for (std::size_t b = 0; b < all_pairs.size(); ++b)
                if (mask >> b & 1) edges.push_back(all_pairs[b]);

            Eigen::MatrixXi adjacency = Eigen::MatrixXi::Zero(n, n);
            for (const auto& [u, v] : edges) {
                adjacency(u, v) = 1;
                adjacency(v, u) = 1;
            }
            if (!consensus::detail::is_connected(adjacency)) continue;
            bool isolated = false;
            for (Index v = 0; v < n; ++v)
                if (adjacency.col(v).sum() == 0) isolated = true;
            if (isolated) continue;

            for (int uniform = 0; uniform < 3; ++uniform) {
                Eigen::VectorXd probs = Eigen::VectorXd::Constant(n, grid[uniform]);
                corpus.push_back(build_graph(edges, probs));
            }
            for (int offset = 0; offset < 2; ++offset) {
                Eigen::VectorXd probs(n);
                for (Index v = 0; v < n; ++v) probs[v] = grid[(v + offset) % 3];
                corpus.push_back(build_graph(edges, probs));
            }
        }
    }
    return corpus;
}

// Runs verify_closed_forms over the whole corpus. With throw_on_failure the
// first disagreement aborts the sweep; otherwise every report is returned
// with its pass flag for the caller to inspect.
inline std::vector<OracleReport> run_corpus_sweep(double tol = 1e-12,
                                                  bool throw_on_failure = true) {
    std::vector<OracleReport> reports;
    for (const CandidateGraph& graph : small_graph_corpus()) {
        const KronBudget oracle_budget{graph.n};
        reports.push_back(compare_against_enumeration(
            graph, expected_operators<double>(graph, oracle_budget), tol, throw_on_failure));
    }
    return reports;
}

} // namespace consensus::oracle
