#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "consensus/errors.hpp"
#include "consensus/graph.hpp"
#include "consensus/moments.hpp"
#include "consensus/types.hpp"

namespace consensus {

// --- mean ----------------------------------------------------------------------

// The two equivalent parameterizations of the dominant left eigenvector of
// E W: per-node weights w_i(p_i, d_i) with normalizer rho, and the
// sigma (I - Sigma)^{-1} d form. Both are computed independently; their
// agreement (v1_ew_i == rho * w_i to 1e-12) is a standing invariant.
template <class Scalar = double>
struct MeanWeights {
    VectorX<Scalar> w;      // w_i = p(d+1)d / (p(d+1) - 1 + q^{d+1})
    Scalar rho;             // (sum_i w_i)^{-1}
    VectorX<Scalar> v1_ew;  // sigma * d_i / (1 - M1_i); L1-normalized, positive
    Scalar sigma_norm;      // (sum_i d_i / (1 - M1_i))^{-1}
};

template <class Scalar = double>
MeanWeights<Scalar> dominant_left_eigvec_closed(const CandidateGraph& graph) {
    MeanWeights<Scalar> mw;
    mw.w.resize(graph.n);
    VectorX<Scalar> ratio(graph.n); // d_i / (1 - M1_i)
    const MomentTable<Scalar> t = moment_table<Scalar>(graph);
    for (Index i = 0; i < graph.n; ++i) {
        const Scalar p = static_cast<Scalar>(graph.probs[i]);
        const Scalar q = Scalar(1) - p;
        const Scalar d = static_cast<Scalar>(graph.degrees[i]);
        mw.w[i] = p * (d + 1) * d / (p * (d + 1) - Scalar(1) + std::pow(q, d + 1));
        ratio[i] = d / (Scalar(1) - t.m1[i]);
    }
    mw.rho = Scalar(1) / mw.w.sum();
    mw.sigma_norm = Scalar(1) / ratio.sum();
    mw.v1_ew = mw.sigma_norm * ratio;
    return mw;
}

// E x* = x(0)^T v1(E W).
template <class Scalar = double>
Scalar expected_consensus_value(const CandidateGraph& graph, const VectorX<Scalar>& x0) {
    if (x0.size() != graph.n)
        throw DimensionMismatch("x0 has length " + std::to_string(x0.size()) +
                                ", graph has n = " + std::to_string(graph.n));
    return x0.dot(dominant_left_eigvec_closed<Scalar>(graph).v1_ew);
}

// y_i = x_i(0) / (n rho w_i): running consensus from y instead of x makes the
// expected consensus value equal the plain average of x(0).
template <class Scalar = double>
VectorX<Scalar> reweight_initial(const CandidateGraph& graph, const VectorX<Scalar>& x0) {
    if (x0.size() != graph.n)
        throw DimensionMismatch("x0 has length " + std::to_string(x0.size()) +
                                ", graph has n = " + std::to_string(graph.n));
    const MeanWeights<Scalar> mw = dominant_left_eigvec_closed<Scalar>(graph);
    VectorX<Scalar> y(graph.n);
    for (Index i = 0; i < graph.n; ++i)
        y[i] = x0[i] / (static_cast<Scalar>(graph.n) * mw.rho * mw.w[i]);
    return y;
}

// --- stationary distributions ----------------------------------------------------

// Left stationary vector of a row-stochastic P: solves (P^T - I) pi = 0 with
// the last balance equation replaced by the normalization sum(pi) = 1. That
// system is nonsingular exactly when the unit eigenvalue is simple; rank
// deficiency or a failed residual check reports SingularChain. One pass of
// iterative refinement keeps the residual near machine precision for
// large, slowly mixing chains.
template <class Derived>
VectorX<typename Derived::Scalar>
stationary_distribution(const Eigen::MatrixBase<Derived>& p_expr,
                        typename Derived::Scalar tol = typename Derived::Scalar(1e-10)) {
    using Scalar = typename Derived::Scalar;
    const MatrixX<Scalar> p = p_expr;
    const Index m = p.rows();
    if (p.cols() != m)
        throw DimensionMismatch("stationary_distribution needs a square matrix");
    for (Index i = 0; i < m; ++i) {
        if ((p.row(i).sum() - Scalar(1)) > Scalar(1e-10) ||
            (p.row(i).sum() - Scalar(1)) < Scalar(-1e-10) || p.row(i).minCoeff() < Scalar(-1e-12))
            throw DomainError("matrix is not row-stochastic within 1e-10 at row " +
                              std::to_string(i));
    }

    MatrixX<Scalar> a = p.transpose() - MatrixX<Scalar>::Identity(m, m);
    a.row(m - 1).setOnes();
    VectorX<Scalar> b = VectorX<Scalar>::Zero(m);
    b[m - 1] = Scalar(1);

    Eigen::FullPivLU<MatrixX<Scalar>> lu(a);
    if (!lu.isInvertible())
        throw SingularChain("stationary system is rank-deficient (non-unique stationary distribution)");
    VectorX<Scalar> pi = lu.solve(b);
    pi += lu.solve(b - a * pi); // iterative refinement

    const Scalar residual = ((pi.transpose() * p).transpose() - pi).cwiseAbs().maxCoeff();
    if (!(residual <= tol))
        throw SingularChain("stationary residual " + std::to_string(double(residual)) +
                            " exceeds tol " + std::to_string(double(tol)));
    return pi / pi.sum();
}

// --- spectrum --------------------------------------------------------------------

// All eigenvalues of E W ordered by distance to 1 (ties: descending real
// part, then descending imaginary part), plus the second-largest modulus.
struct SpectralSummary {
    Eigen::VectorXcd eigenvalues;
    double slem = 0.0;
};

inline SpectralSummary spectral_summary_of(const Eigen::MatrixXd& matrix) {
    Eigen::EigenSolver<Eigen::MatrixXd> solver(matrix, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success)
        throw EigensolveFailure("dense eigensolver did not converge");
    std::vector<std::complex<double>> evs(solver.eigenvalues().data(),
                                          solver.eigenvalues().data() + matrix.rows());
    std::sort(evs.begin(), evs.end(), [](const std::complex<double>& a, const std::complex<double>& b) {
        const double da = std::abs(1.0 - a), db = std::abs(1.0 - b);
        if (da != db) return da < db;
        if (a.real() != b.real()) return a.real() > b.real();
        return a.imag() > b.imag();
    });

    SpectralSummary s;
    s.eigenvalues = Eigen::Map<Eigen::VectorXcd>(evs.data(), static_cast<Index>(evs.size()));
    if (std::abs(s.eigenvalues[0] - 1.0) > 1e-10)
        throw EigensolveFailure("leading eigenvalue is not 1 within 1e-10");
    for (Index k = 1; k < s.eigenvalues.size(); ++k) {
        if (std::abs(s.eigenvalues[k]) > 1.0 + 1e-10)
            throw EigensolveFailure("eigenvalue modulus exceeds 1");
        s.slem = std::max(s.slem, std::abs(s.eigenvalues[k]));
    }
    return s;
}

inline SpectralSummary spectral_summary(const CandidateGraph& graph) {
    return spectral_summary_of(expected_weight_matrix<double>(graph));
}

// Spectral bound on the chain condition number:
//     2 (n^2 - 1) / prod_{(i,j) != (1,1)} (1 - lambda_i lambda_j).
// The product of n^2 - 1 factors underflows double range well before the
// bound itself does (31 nodes already produce ~1e-500), so it is accumulated
// as log-magnitude plus phase and exponentiated once. The product must come
// out essentially real and positive; a factor within 1e-12 of zero means
// some lambda_i lambda_j = 1 and the bound is infinite.
inline double meyer_bound(const SpectralSummary& spectral) {
    const Index n = spectral.eigenvalues.size();
    double log_magnitude = 0.0;
    double phase = 0.0;
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            if (i == 0 && j == 0) continue;
            const std::complex<double> factor =
                1.0 - spectral.eigenvalues[i] * spectral.eigenvalues[j];
            if (std::abs(factor) <= 1e-12)
                throw DegenerateSpectrum("eigenvalue product hits 1; spectral bound is infinite");
            log_magnitude += std::log(std::abs(factor));
            phase += std::arg(factor);
        }
    }
    // sin/cos of the accumulated phase give Im/|prod| and the sign of Re:
    // conjugate eigenvalue pairs must cancel the phase.
    if (std::abs(std::sin(phase)) > 1e-9)
        throw EigensolveFailure("spectral product has a non-negligible imaginary part");
    if (!(std::cos(phase) > 0.0))
        throw DegenerateSpectrum("spectral product is not positive");
    const double log_bound =
        std::log(2.0 * static_cast<double>(n * n - 1)) - log_magnitude - std::log(std::cos(phase));
    if (std::isnan(log_bound))
        throw DegenerateSpectrum("spectral bound is not a number");
    // exp saturates per IEEE: +inf when the true bound exceeds double range
    // (a vacuous but valid upper bound), DBL_MIN when it underflows (valid
    // because an upper bound may only be weakened).
    return std::max(std::exp(log_bound), std::numeric_limits<double>::min());
}

// --- condition number -------------------------------------------------------------

// Group inverse of G = I - Q via the fundamental matrix:
//     G# = (I - Q + 1 pi^T)^{-1} - 1 pi^T.
// The defining identities G G# G = G, G# G G# = G#, G G# = G# G are checked
// to 1e-8 before the result is trusted.
inline Eigen::MatrixXd group_inverse(const Eigen::MatrixXd& q, const Eigen::VectorXd& pi) {
    const Index m = q.rows();
    const Eigen::MatrixXd one_pi = Eigen::VectorXd::Ones(m) * pi.transpose();
    const Eigen::MatrixXd z = Eigen::MatrixXd::Identity(m, m) - q + one_pi;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(z);
    if (!lu.isInvertible())
        throw SingularChain("fundamental matrix I - Q + 1 pi^T is singular");
    const Eigen::MatrixXd ginv = lu.inverse() - one_pi;

    const Eigen::MatrixXd g = Eigen::MatrixXd::Identity(m, m) - q;
    const double r1 = (g * ginv * g - g).cwiseAbs().maxCoeff();
    const double r2 = (ginv * g * ginv - ginv).cwiseAbs().maxCoeff();
    const double r3 = (g * ginv - ginv * g).cwiseAbs().maxCoeff();
    if (r1 > 1e-8 || r2 > 1e-8 || r3 > 1e-8)
        throw SingularChain("group-inverse identities failed (residuals " + std::to_string(r1) +
                            ", " + std::to_string(r2) + ", " + std::to_string(r3) + ")");
    return ginv;
}

// kappa_s = max_{i,j} |g#_ij| for the chain Q = E W (x) E W. Strictly below
// the spectral bound by theory; that inequality is asserted here and its
// violation (impossible unless something upstream broke) reports
// VerificationFailure.
inline double exact_condition_number(const CandidateGraph& graph, const KronBudget& budget = {}) {
    const Eigen::MatrixXd q = kron_expected_product<double>(graph, budget);
    const Eigen::VectorXd pi = stationary_distribution(q);
    const double kappa = group_inverse(q, pi).cwiseAbs().maxCoeff();
    const double bound = meyer_bound(spectral_summary(graph));
    if (!(kappa < bound))
        throw VerificationFailure("condition number " + std::to_string(kappa) +
                                  " is not strictly below its spectral bound " +
                                  std::to_string(bound));
    return kappa;
}

// --- variance ---------------------------------------------------------------------

// Mean, exact variance, and the three-factor upper bound. Kronecker-scale
// fields (exact variance, stationary vectors, kappa) are optional: they are
// absent when n exceeds the budget and the caller asked only for the bound.
struct VarianceReport {
    double mean = 0.0;
    std::optional<double> exact_variance;      // reported clipped at 0
    std::optional<double> exact_variance_raw;  // unclipped diagnostic
    Eigen::VectorXd v1_r;                      // stationary distribution of R (empty if skipped)
    Eigen::VectorXd v1_q;                      // stationary distribution of Q (empty if skipped)
    double bound_term_a = 0.0;                 // ||x0 (x) x0||_1 = (sum |x0_i|)^2
    double bound_term_b = 0.0;                 // max_i S_i = ||Delta||_inf
    double bound_term_c = 0.0;                 // spectral bound factor
    double bound_total = 0.0;                  // A * B * C
    std::optional<double> kappa_exact;
};

namespace detail {

inline Eigen::VectorXd kron_vector(const Eigen::VectorXd& x) {
    const Index n = x.size();
    Eigen::VectorXd k(n * n);
    for (Index i = 0; i < n; ++i)
        for (Index r = 0; r < n; ++r)
            k[kron_index(i, r, n)] = x[i] * x[r];
    return k;
}

} // namespace detail

// var(x*) = [x0 (x) x0]^T v1(R) - [x0^T v1(E W)]^2, with v1(R) from the
// direct stationary solve. Tiny negative results are floating-point
// artifacts: the reported value is clipped at zero, the raw value kept.
inline VarianceReport exact_variance(const CandidateGraph& graph, const Eigen::VectorXd& x0,
                                     const KronBudget& budget = {}) {
    if (x0.size() != graph.n)
        throw DimensionMismatch("x0 has length " + std::to_string(x0.size()) +
                                ", graph has n = " + std::to_string(graph.n));
    VarianceReport report;
    report.mean = expected_consensus_value<double>(graph, x0);
    const Eigen::MatrixXd r = kron_expected_square<double>(graph, budget);
    report.v1_r = stationary_distribution(r);
    report.v1_q = stationary_distribution(kron_expected_product<double>(graph, budget));
    const double raw = detail::kron_vector(x0).dot(report.v1_r) - report.mean * report.mean;
    report.exact_variance_raw = raw;
    report.exact_variance = std::max(raw, 0.0);
    return report;
}

// Three-factor variance bound: A = (sum |x0_i|)^2, B = max_i S_i,
// C = the spectral factor. Never needs Kronecker-scale memory.
inline VarianceReport variance_upper_bound(const CandidateGraph& graph, const Eigen::VectorXd& x0) {
    if (x0.size() != graph.n)
        throw DimensionMismatch("x0 has length " + std::to_string(x0.size()) +
                                ", graph has n = " + std::to_string(graph.n));
    VarianceReport report;
    report.mean = expected_consensus_value<double>(graph, x0);
    const double l1 = x0.cwiseAbs().sum();
    report.bound_term_a = l1 * l1;
    report.bound_term_b = s_values_closed<double>(graph).maxCoeff();
    report.bound_term_c = meyer_bound(spectral_summary(graph));
    // A or B of exactly zero makes the bound zero regardless of C, which can
    // saturate to +inf on large slow chains (0 * inf would be NaN).
    const double ab = report.bound_term_a * report.bound_term_b;
    report.bound_total = ab == 0.0 ? 0.0 : ab * report.bound_term_c;
    return report;
}

// --- full report ------------------------------------------------------------------

struct AnalysisReport {
    Index n = 0;
    Eigen::VectorXd probs;          // resolved per-node listen probabilities
    MeanWeights<double> weights;
    SpectralSummary spectral;
    VarianceReport variance;
};

// One-stop analysis: closed-form mean machinery, spectrum, the bound, and --
// when n fits the budget -- the exact variance and condition number.
inline AnalysisReport analyze(const CandidateGraph& graph, const Eigen::VectorXd& x0,
                              const KronBudget& budget = {}, bool with_kappa = true) {
    AnalysisReport report;
    report.n = graph.n;
    report.probs = graph.probs;
    report.weights = dominant_left_eigvec_closed<double>(graph);
    report.spectral = spectral_summary(graph);
    report.variance = variance_upper_bound(graph, x0);
    if (graph.n <= budget.max_n) {
        VarianceReport exact = exact_variance(graph, x0, budget);
        report.variance.exact_variance = exact.exact_variance;
        report.variance.exact_variance_raw = exact.exact_variance_raw;
        report.variance.v1_r = std::move(exact.v1_r);
        report.variance.v1_q = std::move(exact.v1_q);
        if (with_kappa) report.variance.kappa_exact = exact_condition_number(graph, budget);
    }
    return report;
}

} // namespace consensus
