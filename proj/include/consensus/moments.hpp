#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "consensus/errors.hpp"
#include "consensus/graph.hpp"
#include "consensus/types.hpp"

namespace consensus {

// Size cap for the n^2 x n^2 Kronecker-scale computations. The default keeps
// Q, R, Delta (three dense n^4-entry matrices) comfortably in memory; the
// CLI's --allow-large lifts it to the hard cap of 100.
struct KronBudget {
    Index max_n = 45;
};

inline constexpr Index kron_hard_cap = 100;

namespace detail {

inline void check_kron_budget(Index n, const KronBudget& budget) {
    if (n > budget.max_n)
        throw BudgetExceeded("Kronecker computation needs n <= " + std::to_string(budget.max_n) +
                             ", got n = " + std::to_string(n));
}

template <class Scalar>
void check_moment_domain(Scalar p, int d) {
    if (!(p > Scalar(0)) || p > Scalar(1))
        throw DomainError("moment requires p in (0, 1], got p = " + std::to_string(double(p)));
    if (d < 0)
        throw DomainError("moment requires d >= 0, got d = " + std::to_string(d));
}

} // namespace detail

// First moment of z = 1/(1 + K) with K ~ Binomial(d, p):
//     M1(p, d) = (1 - q^{d+1}) / (p (d+1)),  q = 1 - p.
template <class Scalar>
Scalar moment_m1(Scalar p, int d) {
    detail::check_moment_domain(p, d);
    const Scalar q = Scalar(1) - p;
    return (Scalar(1) - std::pow(q, Scalar(d + 1))) / (p * Scalar(d + 1));
}

// Second moment of z = 1/(1 + K): the explicit finite sum
//     M2(p, d) = sum_{k=0}^{d} C(d,k) p^k q^{d-k} / (k+1)^2.
// The binomial pmf is produced by its two-term recurrence starting from the
// numerically dominant end (k = 0 when q >= p, k = d otherwise), which keeps
// every intermediate bounded and avoids underflow for extreme p.
template <class Scalar>
Scalar moment_m2(Scalar p, int d) {
    detail::check_moment_domain(p, d);
    const Scalar q = Scalar(1) - p;
    if (q == Scalar(0)) // deterministic in-degree d
        return Scalar(1) / (Scalar(d + 1) * Scalar(d + 1));
    if (p <= q) {
        Scalar pmf = std::pow(q, Scalar(d)); // k = 0
        Scalar acc = pmf;
        for (int k = 0; k < d; ++k) {
            pmf *= Scalar(d - k) / Scalar(k + 1) * (p / q);
            acc += pmf / (Scalar(k + 2) * Scalar(k + 2));
        }
        return acc;
    }
    Scalar pmf = std::pow(p, Scalar(d)); // k = d
    Scalar acc = pmf / (Scalar(d + 1) * Scalar(d + 1));
    for (int k = d; k > 0; --k) {
        pmf *= Scalar(k) / Scalar(d - k + 1) * (q / p);
        acc += pmf / (Scalar(k) * Scalar(k));
    }
    return acc;
}

// Per-node moments M1_i, M2_i of z_i = 1/(d~_i + 1).
template <class Scalar = double>
struct MomentTable {
    VectorX<Scalar> m1;
    VectorX<Scalar> m2;
};

template <class Scalar = double>
MomentTable<Scalar> moment_table(const CandidateGraph& graph) {
    MomentTable<Scalar> t;
    t.m1.resize(graph.n);
    t.m2.resize(graph.n);
    for (Index i = 0; i < graph.n; ++i) {
        t.m1[i] = moment_m1(static_cast<Scalar>(graph.probs[i]), graph.degrees[i]);
        t.m2[i] = moment_m2(static_cast<Scalar>(graph.probs[i]), graph.degrees[i]);
    }
    return t;
}

// E W: diagonal M1_i, entry (i, j) = a_ji (1 - M1_i) / d_i. Row-stochastic.
template <class Scalar = double>
MatrixX<Scalar> expected_weight_matrix(const CandidateGraph& graph) {
    const MomentTable<Scalar> t = moment_table<Scalar>(graph);
    MatrixX<Scalar> ew = MatrixX<Scalar>::Zero(graph.n, graph.n);
    for (Index i = 0; i < graph.n; ++i) {
        ew(i, i) = t.m1[i];
        const Scalar off = (Scalar(1) - t.m1[i]) / static_cast<Scalar>(graph.degrees[i]);
        for (Index j = 0; j < graph.n; ++j)
            if (graph.adjacency(j, i) != 0) ew(i, j) = off;
    }
    return ew;
}

// The Kronecker pair-index convention lives here and nowhere else:
// row/column (i, r) of an n^2-dimensional object maps to flat index i*n + r,
// i.e. the first factor of the product indexes the coarse block.
inline Index kron_index(Index i, Index r, Index n) { return i * n + r; }

// Q = E W (x) E W, assembled entrywise from the closed-form factors
// (diagonal M1_i, off-diagonal a_ji (1 - M1_i)/d_i). Entry at
// (kron_index(i, r), kron_index(j, s)) equals E(w_ij) E(w_rs); the
// case-by-case values reduce to that product for every equality pattern
// of (i, j, r, s).
template <class Scalar = double>
MatrixX<Scalar> kron_expected_product(const CandidateGraph& graph, const KronBudget& budget = {}) {
    detail::check_kron_budget(graph.n, budget);
    const MatrixX<Scalar> ew = expected_weight_matrix<Scalar>(graph);
    const Index n = graph.n;
    MatrixX<Scalar> q(n * n, n * n);
    for (Index i = 0; i < n; ++i)
        for (Index r = 0; r < n; ++r)
            for (Index j = 0; j < n; ++j)
                for (Index s = 0; s < n; ++s)
                    q(kron_index(i, r, n), kron_index(j, s, n)) = ew(i, j) * ew(r, s);
    return q;
}

// R = E[W (x) W]. Rows (i, r) with i != r factor into E(w_ij) E(w_rs)
// because the in-neighborhoods of distinct nodes are independent. Rows
// (i, i) need the joint moments of row i with itself:
//
//   col (i, i):                M2_i
//   col (i, s), (j, i), (j, j) with the off-diagonal index adjacent to i:
//                              a_.i (M1_i - M2_i) / d_i
//   col (j, s), j != s, both != i:
//                              a_ji a_si (1 + 2 M2_i - 3 M1_i) / (d_i (d_i - 1))
//                              (zero when d_i = 1, where a_ji a_si = 0 anyway)
//
// Row-stochastic like Q.
template <class Scalar = double>
MatrixX<Scalar> kron_expected_square(const CandidateGraph& graph, const KronBudget& budget = {}) {
    detail::check_kron_budget(graph.n, budget);
    const MomentTable<Scalar> t = moment_table<Scalar>(graph);
    const MatrixX<Scalar> ew = expected_weight_matrix<Scalar>(graph);
    const Index n = graph.n;
    MatrixX<Scalar> rmat(n * n, n * n);
    for (Index i = 0; i < n; ++i) {
        for (Index r = 0; r < n; ++r) {
            const Index row = kron_index(i, r, n);
            if (i != r) {
                for (Index j = 0; j < n; ++j)
                    for (Index s = 0; s < n; ++s)
                        rmat(row, kron_index(j, s, n)) = ew(i, j) * ew(r, s);
                continue;
            }
            const Scalar m1 = t.m1[i];
            const Scalar m2 = t.m2[i];
            const Scalar d = static_cast<Scalar>(graph.degrees[i]);
            const Scalar adjacent = (m1 - m2) / d;
            const Scalar pair = graph.degrees[i] > 1
                                    ? (Scalar(1) + Scalar(2) * m2 - Scalar(3) * m1) / (d * (d - Scalar(1)))
                                    : Scalar(0);
            for (Index j = 0; j < n; ++j) {
                for (Index s = 0; s < n; ++s) {
                    const Index col = kron_index(j, s, n);
                    Scalar v;
                    if (j == i && s == i)
                        v = m2;
                    else if (j == i)
                        v = graph.adjacency(s, i) ? adjacent : Scalar(0);
                    else if (s == i)
                        v = graph.adjacency(j, i) ? adjacent : Scalar(0);
                    else if (j == s)
                        v = graph.adjacency(j, i) ? adjacent : Scalar(0);
                    else
                        v = (graph.adjacency(j, i) && graph.adjacency(s, i)) ? pair : Scalar(0);
                    rmat(row, col) = v;
                }
            }
        }
    }
    return rmat;
}

// Closed-form absolute row sum of Delta's row (i, i):
//     S_i = 2 (1 - M1_i) [ M1_i + (M1_i - 1)/d_i ].
template <class Scalar = double>
VectorX<Scalar> s_values_closed(const CandidateGraph& graph) {
    const MomentTable<Scalar> t = moment_table<Scalar>(graph);
    VectorX<Scalar> s(graph.n);
    for (Index i = 0; i < graph.n; ++i) {
        const Scalar m1 = t.m1[i];
        const Scalar d = static_cast<Scalar>(graph.degrees[i]);
        // An absolute row sum is nonnegative; rounding can push the exact-zero
        // relaxed p = 1 case a few ulp below it.
        s[i] = std::max(Scalar(0),
                        Scalar(2) * (Scalar(1) - m1) * (m1 + (m1 - Scalar(1)) / d));
    }
    return s;
}

template <class Scalar = double>
struct DeltaResult {
    MatrixX<Scalar> delta;     // R - Q
    VectorX<Scalar> s_values;  // closed-form per-node S_i
    Scalar delta_inf_norm;     // max absolute row sum, computed directly
};

// Delta = R - Q with the infinity norm taken directly from the rows; the
// closed-form S_i values are returned alongside so callers (and tests) can
// confirm max_i S_i reproduces the direct norm. Rows (i, r) with i != r
// cancel exactly because Q and R assemble them from identical products.
template <class Scalar = double>
DeltaResult<Scalar> delta_and_norm(const CandidateGraph& graph, const KronBudget& budget = {}) {
    DeltaResult<Scalar> result;
    result.delta = kron_expected_square<Scalar>(graph, budget) -
                   kron_expected_product<Scalar>(graph, budget);
    result.s_values = s_values_closed<Scalar>(graph);
    result.delta_inf_norm = result.delta.cwiseAbs().rowwise().sum().maxCoeff();
    return result;
}

// Everything the second-moment analysis consumes, in one bundle.
template <class Scalar = double>
struct ExpectedOperators {
    MatrixX<Scalar> ew;        // E W
    VectorX<Scalar> sigma;     // diagonal of E W (the M1 values)
    MatrixX<Scalar> q_kron;    // Q = E W (x) E W
    MatrixX<Scalar> r_kron;    // R = E[W (x) W]
    MatrixX<Scalar> delta;     // R - Q
    VectorX<Scalar> s_values;  // closed-form S_i
    Scalar delta_inf_norm;     // direct max absolute row sum of Delta
};

template <class Scalar = double>
ExpectedOperators<Scalar> expected_operators(const CandidateGraph& graph,
                                             const KronBudget& budget = {}) {
    ExpectedOperators<Scalar> ops;
    ops.ew = expected_weight_matrix<Scalar>(graph);
    ops.sigma = ops.ew.diagonal();
    ops.q_kron = kron_expected_product<Scalar>(graph, budget);
    ops.r_kron = kron_expected_square<Scalar>(graph, budget);
    ops.delta = ops.r_kron - ops.q_kron;
    ops.s_values = s_values_closed<Scalar>(graph);
    ops.delta_inf_norm = ops.delta.cwiseAbs().rowwise().sum().maxCoeff();
    return ops;
}

} // namespace consensus
