#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "consensus/errors.hpp"
#include "consensus/types.hpp"

namespace consensus {

// Fixed undirected candidate topology plus per-node listen probabilities.
// Immutable after construction; safe to share across threads.
//
// adjacency is symmetric 0/1 with zero diagonal; degrees[i] is the i-th
// column sum (equal to the row sum by symmetry -- both are computed and
// checked at build time). directed_pairs lists every ordered pair (u, v)
// with adjacency(u, v) = 1 in lexicographic order; it is the single source
// of truth for the order in which random draws are consumed when sampling
// directed realizations.
struct CandidateGraph {
    Index n = 0;
    Eigen::MatrixXi adjacency;
    Eigen::VectorXd probs;
    Eigen::VectorXi degrees;
    std::vector<std::pair<Index, Index>> directed_pairs;
    bool relaxed = false; // p = 1 permitted (test/oracle builds only)
};

namespace detail {

inline bool is_connected(const Eigen::MatrixXi& adjacency) {
    const Index n = adjacency.rows();
    if (n == 0) return false;
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<Index> stack{0};
    seen[0] = 1;
    Index reached = 1;
    while (!stack.empty()) {
        const Index u = stack.back();
        stack.pop_back();
        for (Index v = 0; v < n; ++v) {
            if (adjacency(u, v) != 0 && !seen[static_cast<std::size_t>(v)]) {
                seen[static_cast<std::size_t>(v)] = 1;
                ++reached;
                stack.push_back(v);
            }
        }
    }
    return reached == n;
}

} // namespace detail

// Validates and assembles a CandidateGraph from an unordered edge list and
// per-node probabilities. Node count is probs.size(). In strict mode every
// p must lie in the open interval (0, 1); relaxed mode (oracle/test builds)
// additionally permits p = 1.
inline CandidateGraph build_graph(const std::vector<std::pair<Index, Index>>& edges,
                                  const Eigen::VectorXd& probs,
                                  bool relaxed = false) {
    CandidateGraph g;
    g.n = probs.size();
    g.relaxed = relaxed;
    if (g.n < 2)
        throw DisconnectedGraph("graph needs at least 2 nodes, got " + std::to_string(g.n));

    for (Index v = 0; v < g.n; ++v) {
        const double p = probs[v];
        const bool ok = std::isfinite(p) && p > 0.0 && (relaxed ? p <= 1.0 : p < 1.0);
        if (!ok)
            throw InvalidProbability("p[" + std::to_string(v) + "] = " + std::to_string(p) +
                                     (relaxed ? " outside (0,1]" : " outside (0,1)"));
    }

    g.adjacency = Eigen::MatrixXi::Zero(g.n, g.n);
    std::set<std::pair<Index, Index>> seen;
    for (const auto& [a, b] : edges) {
        if (a < 0 || a >= g.n || b < 0 || b >= g.n)
            throw ValidationError("edge (" + std::to_string(a) + "," + std::to_string(b) +
                                  ") out of range for n = " + std::to_string(g.n));
        if (a == b)
            throw SelfLoop("self-loop at node " + std::to_string(a));
        const auto key = std::minmax(a, b);
        if (!seen.insert(key).second)
            throw DuplicateEdge("duplicate edge (" + std::to_string(a) + "," + std::to_string(b) + ")");
        g.adjacency(a, b) = 1;
        g.adjacency(b, a) = 1;
    }

    if (!detail::is_connected(g.adjacency))
        throw DisconnectedGraph("graph is not connected");

    g.probs = probs;
    g.degrees = g.adjacency.colwise().sum();
    const Eigen::VectorXi row_degrees = g.adjacency.rowwise().sum();
    if (g.degrees != row_degrees)
        throw ValidationError("adjacency is not symmetric"); // unreachable by construction
    for (Index v = 0; v < g.n; ++v)
        if (g.degrees[v] < 1)
            throw DisconnectedGraph("node " + std::to_string(v) + " is isolated");

    g.directed_pairs.reserve(static_cast<std::size_t>(g.degrees.sum()));
    for (Index u = 0; u < g.n; ++u)
        for (Index v = 0; v < g.n; ++v)
            if (g.adjacency(u, v) != 0) g.directed_pairs.emplace_back(u, v);
    return g;
}

// --- leader/follower experiment topologies -----------------------------------

// Which degree a leader-probability rule divides into.
//   full_degree:     p = scale / d_v with d_v the leader's full graph degree
//                    (followers plus leader-leader edges). Default.
//   follower_count:  p = scale / (number of v's followers), i.e. the size of
//                    v's star, excluding leader-leader edges.
enum class DegreeBasis { full_degree, follower_count };

struct LeaderProbRule {
    double scale = 1.0;
    DegreeBasis basis = DegreeBasis::full_degree;
};

inline LeaderProbRule inverse_degree(DegreeBasis basis = DegreeBasis::full_degree) {
    return {1.0, basis};
}

inline LeaderProbRule scaled_inverse_degree(double scale,
                                            DegreeBasis basis = DegreeBasis::full_degree) {
    return {scale, basis};
}

namespace detail {

inline CandidateGraph leader_follower(const std::array<int, 3>& follower_counts,
                                      double p_follower, LeaderProbRule rule, bool ring) {
    for (int c : follower_counts)
        if (c < 1) throw ValidationError("follower counts must be positive");

    const Index n = 3 + follower_counts[0] + follower_counts[1] + follower_counts[2];
    std::vector<std::pair<Index, Index>> edges;
    edges.emplace_back(0, 1);
    edges.emplace_back(1, 2);
    if (ring) edges.emplace_back(0, 2);
    Index next = 3;
    std::array<Index, 3> full_degree{};
    for (Index leader = 0; leader < 3; ++leader) {
        const Index leader_links = ring ? 2 : (leader == 1 ? 2 : 1);
        full_degree[static_cast<std::size_t>(leader)] =
            follower_counts[static_cast<std::size_t>(leader)] + leader_links;
        for (int k = 0; k < follower_counts[static_cast<std::size_t>(leader)]; ++k)
            edges.emplace_back(leader, next++);
    }

    Eigen::VectorXd probs(n);
    for (Index leader = 0; leader < 3; ++leader) {
        const double denom = rule.basis == DegreeBasis::full_degree
                                 ? static_cast<double>(full_degree[static_cast<std::size_t>(leader)])
                                 : static_cast<double>(follower_counts[static_cast<std::size_t>(leader)]);
        const double p = rule.scale / denom;
        if (!(p > 0.0 && p < 1.0))
            throw InvalidProbability("leader rule gives p = " + std::to_string(p) +
                                     " for leader " + std::to_string(leader));
        probs[leader] = p;
    }
    if (!(p_follower > 0.0 && p_follower < 1.0))
        throw InvalidProbability("p_follower = " + std::to_string(p_follower) + " outside (0,1)");
    for (Index v = 3; v < n; ++v) probs[v] = p_follower;

    return build_graph(edges, probs);
}

} // namespace detail

// Three stars whose leaders form a path 0-1-2. Nodes are ordered
// [leader0, leader1, leader2, followers of 0, followers of 1, followers of 2];
// each follower attaches only to its leader and listens with p_follower.
inline CandidateGraph leader_follower_chain(const std::array<int, 3>& follower_counts,
                                            double p_follower,
                                            LeaderProbRule rule = inverse_degree()) {
    return detail::leader_follower(follower_counts, p_follower, rule, /*ring=*/false);
}

// Same as the chain builder plus the closing leader edge {0, 2}.
inline CandidateGraph leader_follower_ring(const std::array<int, 3>& follower_counts,
                                           double p_follower,
                                           LeaderProbRule rule = inverse_degree()) {
    return detail::leader_follower(follower_counts, p_follower, rule, /*ring=*/true);
}

// --- scenario -----------------------------------------------------------------

// One complete experiment description: graph, initial condition, and the
// Monte Carlo controls.
struct Scenario {
    CandidateGraph graph;
    Eigen::VectorXd initial;
    long trials = 100;
    std::uint64_t master_seed = 12345;
    double tol = 1e-10;
    long max_steps = 100000;
};

inline void validate_scenario(const Scenario& sc) {
    if (sc.initial.size() != sc.graph.n)
        throw DimensionMismatch("initial has length " + std::to_string(sc.initial.size()) +
                                ", graph has n = " + std::to_string(sc.graph.n));
    for (Index i = 0; i < sc.initial.size(); ++i)
        if (!std::isfinite(sc.initial[i]))
            throw ValidationError("initial[" + std::to_string(i) + "] is not finite");
    if (sc.trials < 1)
        throw ValidationError("trials must be >= 1, got " + std::to_string(sc.trials));
    if (!(sc.tol > 0.0))
        throw ValidationError("tol must be > 0");
    if (sc.max_steps < 1)
        throw ValidationError("max_steps must be >= 1");
}

} // namespace consensus
