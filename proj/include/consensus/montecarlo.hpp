#pragma once

#include <algorithm>
#include <cmath>
#include <thread>
#include <vector>

#include "consensus/errors.hpp"
#include "consensus/graph.hpp"
#include "consensus/random_net.hpp"
#include "consensus/rng.hpp"

namespace consensus {

struct TrajectoryResult {
    double consensus_value = 0.0; // mean of the final state vector
    long steps = 0;               // update steps applied before stopping
    bool converged = false;       // spread < tol at termination
};

// Runs one trajectory x(k) = W_k x(k-1) until the spread max(x) - min(x)
// drops below tol or max_steps updates have been applied. Each step draws
// one uniform per candidate directed pair in the fixed lexicographic order
// and accumulates heard values directly -- arithmetic identical (up to
// summation order) to building W_k and multiplying, with the same RNG
// consumption, but without materializing the matrix.
inline TrajectoryResult run_trajectory(const CandidateGraph& graph, const Eigen::VectorXd& x0,
                                       RngStream& stream, double tol, long max_steps) {
    if (x0.size() != graph.n)
        throw DimensionMismatch("x0 has length " + std::to_string(x0.size()) +
                                ", graph has n = " + std::to_string(graph.n));
    if (!(tol > 0.0)) throw DomainError("tol must be > 0");
    if (max_steps < 1) throw DomainError("max_steps must be >= 1");

    Eigen::VectorXd x = x0;
    Eigen::VectorXd acc(graph.n);
    Eigen::VectorXd cnt(graph.n);
    for (long step = 0; step < max_steps; ++step) {
        if (x.maxCoeff() - x.minCoeff() < tol) return {x.mean(), step, true};
        acc = x;
        cnt.setOnes();
        for (const auto& [u, v] : graph.directed_pairs) {
            if (stream.uniform() < graph.probs[v]) {
                acc[v] += x[u];
                cnt[v] += 1.0;
            }
        }
        x = acc.cwiseQuotient(cnt);
    }
    return {x.mean(), max_steps, x.maxCoeff() - x.minCoeff() < tol};
}

struct HistogramBin {
    double lower = 0.0;
    double upper = 0.0;
    long count = 0;
};

struct EnsembleStats {
    long trials = 0;                       // requested trials
    long converged = 0;                    // how many of them converged
    double mean = 0.0;                     // over converged trials
    double std = 0.0;                      // unbiased, over converged trials
    bool std_defined = false;              // false when fewer than 2 converged
    std::vector<TrajectoryResult> results; // all trials, by trial index
    std::vector<double> values;            // converged consensus values, trial order
    std::vector<HistogramBin> histogram;   // over [min value, max value]
};

// Runs scenario.trials independent trajectories. Trial t always uses the
// stream derived from (master_seed, t), so results are identical for any
// worker count; workers only partition the trial range. Mean/std/histogram
// are computed over converged trials in trial order. bins controls the
// histogram resolution.
inline EnsembleStats run_ensemble(const Scenario& scenario, int workers = 0, int bins = 20) {
    validate_scenario(scenario);
    if (bins < 1) throw DomainError("bins must be >= 1");

    int n_workers = workers > 0 ? workers : static_cast<int>(std::thread::hardware_concurrency());
    if (n_workers < 1) n_workers = 1;
    n_workers = static_cast<int>(std::min<long>(n_workers, scenario.trials));

    EnsembleStats stats;
    stats.trials = scenario.trials;
    stats.results.resize(static_cast<std::size_t>(scenario.trials));

    auto run_range = [&](long lo, long hi) {
        for (long t = lo; t < hi; ++t) {
            RngStream stream = RngStream::for_trial(scenario.master_seed,
                                                    static_cast<std::uint64_t>(t));
            stats.results[static_cast<std::size_t>(t)] = run_trajectory(
                scenario.graph, scenario.initial, stream, scenario.tol, scenario.max_steps);
        }
    };

    if (n_workers == 1) {
        run_range(0, scenario.trials);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_workers));
        const long chunk = (scenario.trials + n_workers - 1) / n_workers;
        for (int w = 0; w < n_workers; ++w) {
            const long lo = static_cast<long>(w) * chunk;
            const long hi = std::min(scenario.trials, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back(run_range, lo, hi);
        }
        for (auto& th : pool) th.join();
    }

    for (const TrajectoryResult& r : stats.results)
        if (r.converged) stats.values.push_back(r.consensus_value);
    stats.converged = static_cast<long>(stats.values.size());
    if (stats.converged == 0)
        throw AllTrialsDiverged("no trial converged within " +
                                std::to_string(scenario.max_steps) + " steps");

    // Anchor both passes at the first value: consensus values cluster far
    // from zero, and the shift keeps identical inputs at spread exactly 0.
    const double anchor = stats.values.front();
    double shifted_sum = 0.0;
    for (double v : stats.values) shifted_sum += v - anchor;
    const double shifted_mean = shifted_sum / static_cast<double>(stats.converged);
    stats.mean = anchor + shifted_mean;
    if (stats.converged >= 2) {
        double ss = 0.0;
        for (double v : stats.values) {
            const double d = (v - anchor) - shifted_mean;
            ss += d * d;
        }
        stats.std = std::sqrt(ss / static_cast<double>(stats.converged - 1));
        stats.std_defined = true;
    }

    const auto [lo_it, hi_it] = std::minmax_element(stats.values.begin(), stats.values.end());
    const double lo = *lo_it, hi = *hi_it;
    const double width = (hi - lo) / static_cast<double>(bins);
    stats.histogram.resize(static_cast<std::size_t>(bins));
    for (int b = 0; b < bins; ++b) {
        stats.histogram[static_cast<std::size_t>(b)].lower = lo + width * b;
        stats.histogram[static_cast<std::size_t>(b)].upper =
            (b + 1 == bins) ? hi : lo + width * (b + 1);
    }
    for (double v : stats.values) {
        long idx = width > 0.0 ? static_cast<long>((v - lo) / width) : 0;
        idx = std::clamp<long>(idx, 0, bins - 1);
        stats.histogram[static_cast<std::size_t>(idx)].count += 1;
    }
    return stats;
}

} // namespace consensus
