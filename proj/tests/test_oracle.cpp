#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "consensus/oracle.hpp"

using namespace consensus;

namespace {

CandidateGraph single_edge() { return build_graph({{0, 1}}, Eigen::Vector2d(0.5, 0.5)); }

} // namespace

TEST_CASE("enumeration: single edge has four cases and the pinned mean matrix") {
    const oracle::Enumerated e = oracle::enumerate_expectations(single_edge());
    CHECK(e.cases == 4);
    CHECK(std::abs(e.weight_sum - 1.0) <= 1e-15);
    Eigen::MatrixXd want(2, 2);
    want << 0.75, 0.25, 0.25, 0.75;
    CHECK((e.ew - want).cwiseAbs().maxCoeff() <= 1e-15);
    // enumerated E W is row-stochastic
    CHECK((e.ew.rowwise().sum() - Eigen::Vector2d::Ones()).cwiseAbs().maxCoeff() <= 1e-13);
    CHECK((e.r_kron.rowwise().sum() - Eigen::VectorXd::Ones(4)).cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("enumeration: relaxed p=1 leaves a single realization with weight 1") {
    const CandidateGraph g = build_graph({{0, 1}}, Eigen::Vector2d::Ones(), true);
    const oracle::Enumerated e = oracle::enumerate_expectations(g);
    CHECK(e.cases == 4);
    CHECK(e.weight_sum == 1.0);
    CHECK((e.ew - Eigen::MatrixXd::Constant(2, 2, 0.5)).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("enumeration: path of three matches the closed form at 1e-14") {
    const CandidateGraph g = build_graph({{0, 1}, {1, 2}}, Eigen::Vector3d(0.5, 0.5, 0.5));
    const oracle::Enumerated e = oracle::enumerate_expectations(g);
    CHECK(e.cases == 16);
    CHECK((e.ew - expected_weight_matrix<double>(g)).cwiseAbs().maxCoeff() <= 1e-14);
    const KronBudget budget{g.n};
    CHECK((e.r_kron - kron_expected_square<double>(g, budget)).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("enumeration budget is enforced") {
    std::vector<std::pair<Index, Index>> edges;
    for (Index v = 0; v + 1 < 12; ++v) edges.emplace_back(v, v + 1); // 22 directed edges
    const CandidateGraph g = build_graph(edges, Eigen::VectorXd::Constant(12, 0.5));
    CHECK_THROWS_AS(oracle::enumerate_expectations(g), TooLarge);
    CHECK_THROWS_AS(oracle::verify_closed_forms(g), TooLarge);
}

TEST_CASE("verify_closed_forms: pinned instances pass at 1e-12") {
    const oracle::OracleReport edge = oracle::verify_closed_forms(single_edge());
    CHECK(edge.pass);
    CHECK(edge.cases_checked == 4);

    const CandidateGraph triangle =
        build_graph({{0, 1}, {0, 2}, {1, 2}}, Eigen::Vector3d(0.3, 0.5, 0.7));
    const oracle::OracleReport rep = oracle::verify_closed_forms(triangle);
    CHECK(rep.pass);
    CHECK(rep.cases_checked == 64);
    CHECK(rep.max_err_ew <= 1e-12);
    CHECK(rep.max_err_r <= 1e-12);
    CHECK(rep.max_err_delta <= 1e-12);
    CHECK(rep.max_err_delta_norm <= 1e-12);
    CHECK(rep.max_err_mean <= 1e-12);
    CHECK(rep.max_err_variance <= 1e-12);
}

TEST_CASE("fault injection: corrupted closed forms are caught") {
    const CandidateGraph g = single_edge();
    const KronBudget budget{g.n};

    SUBCASE("corrupted S value trips the Delta-norm check") {
        ExpectedOperators<double> ops = expected_operators<double>(g, budget);
        Index argmax = 0;
        ops.s_values.maxCoeff(&argmax);
        ops.s_values(argmax) += 1e-6;
        CHECK_THROWS_AS(
            oracle::compare_against_enumeration(g, ops, 1e-12, /*throw_on_failure=*/true),
            VerificationFailure);
        const oracle::OracleReport rep =
            oracle::compare_against_enumeration(g, ops, 1e-12, /*throw_on_failure=*/false);
        CHECK_FALSE(rep.pass);
        CHECK(rep.max_err_delta_norm == doctest::Approx(1e-6).epsilon(1e-6));
        CHECK(rep.max_err_ew <= 1e-12); // everything else still agrees
    }

    SUBCASE("corrupted R entry trips the second-moment check") {
        ExpectedOperators<double> ops = expected_operators<double>(g, budget);
        ops.r_kron(0, 0) += 5e-9;
        const oracle::OracleReport rep =
            oracle::compare_against_enumeration(g, ops, 1e-12, /*throw_on_failure=*/false);
        CHECK_FALSE(rep.pass);
        CHECK(rep.max_err_r == doctest::Approx(5e-9).epsilon(1e-6));
    }
}

TEST_CASE("corpus: every connected labeled graph on 2..4 nodes, five prob assignments") {
    const std::vector<CandidateGraph> corpus = oracle::small_graph_corpus();
    CHECK(corpus.size() == 215);
    long by_n[5] = {0, 0, 0, 0, 0};
    for (const CandidateGraph& g : corpus) {
        REQUIRE(g.n >= 2);
        REQUIRE(g.n <= 4);
        by_n[g.n] += 1;
        CHECK(static_cast<int>(g.directed_pairs.size()) <= oracle::max_directed_edges);
    }
    // 1, 4, 38 connected labeled graphs on 2, 3, 4 nodes; five prob assignments each
    CHECK(by_n[2] == 5);
    CHECK(by_n[3] == 20);
    CHECK(by_n[4] == 190);
}

TEST_CASE("corpus sweep passes wholesale at 1e-12") {
    const std::vector<oracle::OracleReport> reports = oracle::run_corpus_sweep(1e-12, false);
    CHECK(reports.size() == 215);
    for (const oracle::OracleReport& rep : reports) {
        CHECK(rep.pass);
        CHECK(rep.cases_checked ==
              (1L << std::llround(std::log2(double(rep.cases_checked)))));
    }
}

TEST_CASE("graph descriptors are distinct across the corpus") {
    const std::vector<CandidateGraph> corpus = oracle::small_graph_corpus();
    std::set<std::string> ids;
    for (const CandidateGraph& g : corpus) CHECK(ids.insert(oracle::describe_graph(g)).second);
}
