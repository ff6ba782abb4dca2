#pragma once

#include "consensus/graph.hpp"
#include "consensus/rng.hpp"
#include "consensus/types.hpp"

namespace consensus {

// One sampled directed communication graph. adjacency(u, v) = 1 iff the
// directed edge u -> v is active this slot; in_degrees[v] is the v-th
// column sum.
struct DirectedRealization {
    Eigen::MatrixXi adjacency;
    Eigen::VectorXi in_degrees;
};

// A consensus weight matrix is an ordinary dense row-stochastic matrix;
// no wrapper type. Rows sum to 1 by construction and the diagonal is
// at least 1/(d_i + 1).
using WeightMatrix = Eigen::MatrixXd;

// Samples a directed realization: each ordered candidate pair (u, v) is
// included independently with probability probs[v] -- the head node's
// listen probability -- so reciprocal edges are independent draws and
// in-degrees are Binomial(d_v, p_v).
//
// Draw order is fixed by graph.directed_pairs (lexicographic), one uniform
// per pair, which makes RNG consumption bit-reproducible across platforms
// and worker counts.
inline DirectedRealization sample_realization(const CandidateGraph& graph, RngStream& stream) {
    DirectedRealization r;
    r.adjacency = Eigen::MatrixXi::Zero(graph.n, graph.n);
    r.in_degrees = Eigen::VectorXi::Zero(graph.n);
    for (const auto& [u, v] : graph.directed_pairs) {
        if (stream.uniform() < graph.probs[v]) {
            r.adjacency(u, v) = 1;
            r.in_degrees[v] += 1;
        }
    }
    return r;
}

// W = (D~ + I)^{-1} (A~ + I)^T: row i holds 1/(d~_i + 1) on the diagonal and
// at column j for every in-neighbor j (adjacency(j, i) = 1), zero elsewhere.
// Every node averages itself with whoever it heard this slot.
template <class Scalar = double>
MatrixX<Scalar> weight_matrix(const DirectedRealization& realization) {
    const Index n = realization.adjacency.rows();
    MatrixX<Scalar> w = MatrixX<Scalar>::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
        const Scalar share = Scalar(1) / static_cast<Scalar>(realization.in_degrees[i] + 1);
        w(i, i) = share;
        for (Index j = 0; j < n; ++j)
            if (realization.adjacency(j, i) != 0) w(i, j) = share;
    }
    return w;
}

} // namespace consensus
