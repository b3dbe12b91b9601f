#include "disorder/detect.hpp"
#include "disorder/filter.hpp"
#include "disorder/io.hpp"
#include "disorder/oracle.hpp"

#include <nlohmann/json.hpp>

#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "golden_compare.hpp"

using namespace disorder;
using namespace disorder::testing;

namespace {

RSTable ones_table(const ModelSpec& m, std::size_t nodes = 21) {
    RSTable t;
    t.grid = PosteriorGrid::uniform(nodes, nodes);
    t.n_states = m.n_states();
    t.rho = m.prior.rho;
    const std::size_t total = t.n_states * nodes * nodes;
    t.R.assign(total, 0.0);
    t.S.assign(total, 1.0);
    t.Q.resize(total);
    for (std::size_t z = 0; z < t.n_states; ++z)
        for (std::size_t ai = 0; ai < nodes; ++ai)
            for (std::size_t bj = 0; bj < nodes; ++bj) {
                const double a = t.grid.alpha_nodes[ai];
                t.Q[t.index(z, ai, bj)] = a - a * t.grid.beta_nodes[bj];
            }
    return t;
}

} // namespace

TEST_CASE("reward examples") {
    CHECK(reward_h(0.5, 0.5) == 0.0);
    CHECK(reward_h(1.0, 0.0) == 1.0);
    const ModelSpec m2 = make_m2();
    CHECK(reward_h(m2.prior.pi, m2.prior.pi * m2.prior.rho) ==
          doctest::Approx(m2.prior.pi * (1.0 - m2.prior.rho)).epsilon(1e-15));
    CHECK_THROWS_AS(reward_h(0.3, 0.5), std::invalid_argument);
}

TEST_CASE("one-step continuation against the flat first tables") {
    const ModelSpec m2 = make_m2();
    const RSTable t = ones_table(m2);
    // q1 = 0.1, p2 = 0.8, gamma = rho (1 - alpha) = 0.125
    CHECK(bellman_T(m2, t, 0, 0, 0.5, 0.5) == doctest::Approx(0.0375).epsilon(1e-13));
    CHECK(bellman_T(m2, t, 0, 1, 1.0, 1.0) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("exact continuation equals the history-tree continuation") {
    const ModelSpec m2 = make_m2();
    // Continuation of horizon-3 stopping from a depth-1 state equals the
    // recursive evaluation with two remaining refinements.
    const auto trace = run_filter(m2, {1});
    const PosteriorState& s = trace[1];
    const DpResult dp = dp_detect(m2, 3, DpMode::RawDensity, true);

    double cont = 0.0;
    for (std::size_t u = 0; u < 2; ++u) {
        const double h = mixture_H(m2, s.x_curr, u, s.pi1, s.pi2, s.pi12);
        const PosteriorState nxt = filter_step(m2, s, u);
        cont += h * m2.mu(u) * detect_q_exact(m2, 1, nxt.x_curr, nxt.pi1, nxt.pi2);
    }
    const DpNodeInfo node = dp.nodes.at({1});
    const double dp_cont_or_stop = node.value_togo;
    CHECK(std::max(s.pi1 - s.pi2, cont) == doctest::Approx(dp_cont_or_stop).epsilon(1e-12));
}

TEST_CASE("value iteration is monotone with geometric increments on M2") {
    const ModelSpec m2 = make_m2();
    const PosteriorGrid grid = PosteriorGrid::uniform(41, 41);
    std::vector<double> prev;
    std::vector<double> deltas;
    const RSTable table = iterate_RS(
        m2, grid, 1e-9, 400, 1, [&](int, const std::vector<double>& q) {
            if (!prev.empty()) {
                double delta = 0.0;
                for (std::size_t i = 0; i < q.size(); ++i) {
                    CHECK(q[i] >= prev[i] - 1e-12);
                    CHECK(q[i] >= 0.0);
                    CHECK(q[i] <= 1.0);
                    delta = std::max(delta, q[i] - prev[i]);
                }
                deltas.push_back(delta);
            }
            prev = q;
        });
    CHECK(table.converged);
    CHECK(table.delta <= 1e-9);
    const double rate = std::max(m2.prior.p1, m2.prior.p2);
    for (std::size_t k = 0; k < deltas.size(); ++k)
        CHECK(deltas[k] <= 3.0 * std::pow(rate, static_cast<double>(k + 1)) + 1e-12);
    for (double v : table.R) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    for (double v : table.S) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("degenerate middle regime stops immediately everywhere") {
    // f1 == f2 and q1 = 0: continuing can never beat stopping, so the value
    // table is the reward itself from the first sweep on.
    ModelSpec m = make_model({{0.9, 0.1}, {0.2, 0.8}}, {{0.5, 0.5}, {0.5, 0.5}},
                             {{0.5, 0.5}, {0.5, 0.5}}, {0.1, 0.25, 1.0, 0.8});
    const PosteriorGrid grid = PosteriorGrid::uniform(21, 21);
    const RSTable t = iterate_RS(m, grid, 1e-9, 50);
    CHECK(t.iterations <= 2);
    CHECK(t.delta <= 1e-15);
    for (std::size_t z = 0; z < 2; ++z)
        for (std::size_t ai = 0; ai < grid.alpha_nodes.size(); ++ai)
            for (std::size_t bj = 0; bj < grid.beta_nodes.size(); ++bj) {
                const double a = grid.alpha_nodes[ai];
                const double h = a - a * grid.beta_nodes[bj];
                CHECK(std::abs(t.Q[t.index(z, ai, bj)] - h) <= 1e-15);
            }
    for (double v : t.R) CHECK(v <= 1e-15); // q1 = 0 starves the R component
    for (double v : t.S) {
        CHECK(v >= m.prior.p2 - 1e-12);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("grid recursion preserves the max-of-stop-or-continue identity") {
    const ModelSpec m2 = make_m2();
    const PosteriorGrid grid = PosteriorGrid::uniform(41, 41);
    for (int k = 1; k <= 4; ++k) {
        const RSTable at_k = iterate_RS(m2, grid, 1e-15, k);
        const RSTable at_k1 = iterate_RS(m2, grid, 1e-15, k + 1);
        for (std::size_t z = 0; z < 2; ++z)
            for (std::size_t ai = 0; ai < grid.alpha_nodes.size(); ++ai)
                for (std::size_t bj = 0; bj < grid.beta_nodes.size(); ++bj) {
                    const double a = grid.alpha_nodes[ai];
                    const double b = a * grid.beta_nodes[bj];
                    const std::size_t idx = at_k1.index(z, ai, bj);
                    // the sweep operator itself
                    const double t_q = q_continuation(m2, at_k, z, a, b);
                    CHECK(std::abs(at_k1.Q[idx] - std::max(a - b, t_q)) <= 1e-12);
                    // the decomposition tables assemble the same operator up
                    // to interpolation consistency; the error is O(grid step)
                    // in a thin band along the stop boundary
                    const double t_rs = bellman_T(m2, at_k, 0, z, a, b);
                    CHECK(std::abs(t_q - t_rs) <= 5e-3);
                    const double gamma = m2.prior.rho * (1.0 - a);
                    const double mix =
                        (1.0 - a - gamma) * at_k1.R[idx] + (a - b) * at_k1.S[idx];
                    CHECK(std::abs(mix - at_k1.Q[idx]) <= 5e-3);
                }
    }
}

TEST_CASE("exact recursion matches the history-tree DP at reachable states") {
    std::vector<ModelSpec> models{make_m2()};
    for (std::uint64_t s = 0; s < 3; ++s) models.push_back(random_model(s, 2));
    const long horizon = 6;
    for (const ModelSpec& m : models) {
        const DpResult dp = dp_detect(m, horizon, DpMode::RawDensity, true);
        for (std::size_t len = 1; len <= static_cast<std::size_t>(horizon); ++len)
            for (const auto& obs : all_strings(2, len)) {
                const auto trace = run_filter(m, obs);
                const PosteriorState& s = trace.back();
                const int k = static_cast<int>(horizon - static_cast<long>(len));
                const double q = detect_q_exact(m, k, s.x_curr, s.pi1, s.pi2);
                CHECK(std::abs(q - dp.nodes.at(obs).value_togo) <= 1e-8);
            }
    }
}

TEST_CASE("solver agrees with the oracle on degenerate priors") {
    SUBCASE("no middle segment can ever occur") {
        ModelSpec m = make_m2();
        m.prior.pi = 0.0;
        m.prior.rho = 1.0;
        const DetectPolicy policy = solve_detect(m, PosteriorGrid::uniform(41, 41), 1e-10);
        CHECK(std::abs(policy.value_at_x0 - dp_detect(m, 6).value) <= 1e-6);
        CHECK(policy.value_at_x0 <= 1e-6);
    }
    SUBCASE("certain separated switch at the origin stops immediately") {
        ModelSpec m = make_m2();
        m.prior.pi = 1.0;
        m.prior.rho = 0.0;
        const DetectPolicy policy = solve_detect(m, PosteriorGrid::uniform(41, 41), 1e-10);
        CHECK(policy.immediate_stop_at_zero);
        CHECK(policy.value_at_x0 == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(dp_detect(m, 4).value == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("non-convergence is reported, not hidden") {
    const ModelSpec m2 = make_m2();
    const RSTable t = iterate_RS(m2, PosteriorGrid::uniform(21, 21), 1e-15, 5);
    CHECK_FALSE(t.converged);
    CHECK(t.iterations == 5);
    CHECK(t.delta > 1e-15);
}

TEST_CASE("policy artifact is deterministic and reloadable") {
    const ModelSpec m2 = make_m2();
    const PosteriorGrid grid = PosteriorGrid::uniform(41, 41);
    const DetectPolicy a = solve_detect(m2, grid, 1e-9);
    const DetectPolicy b = solve_detect(m2, grid, 1e-9);
    const std::string dump_a = detect_policy_to_json(m2, a, 1e-9).dump();
    const std::string dump_b = detect_policy_to_json(m2, b, 1e-9).dump();
    CHECK(dump_a == dump_b);

    const DetectPolicy back = detect_policy_from_json(nlohmann::json::parse(dump_a));
    CHECK(back.value_at_x0 == a.value_at_x0);
    CHECK(back.immediate_stop_at_zero == a.immediate_stop_at_zero);
    auto eng = make_run_engine(4, 2);
    for (int rep = 0; rep < 200; ++rep) {
        const double alpha = uniform01(eng);
        const double beta = alpha * uniform01(eng);
        const auto z = static_cast<std::size_t>(uniform01(eng) * 2.0);
        CHECK(back.stop(m2, 0, z, alpha, beta) == a.stop(m2, 0, z, alpha, beta));
    }
}

TEST_CASE("solved artifact matches the golden file") {
    const ModelSpec m2 = make_m2();
    const DetectPolicy policy = solve_detect(m2, PosteriorGrid::uniform(21, 21), 1e-9);
    const nlohmann::json got = detect_policy_to_json(m2, policy, 1e-9);
    const nlohmann::json want = nlohmann::json::parse(
        read_file(std::string(DISORDER_GOLDEN_DIR) + "/m2_detect_policy_21.json"));
    std::string where;
    const bool close = json_close(got, want, 1e-12, where);
    INFO(where);
    CHECK(close);
}

TEST_CASE("threaded sweeps reproduce the single-thread tables") {
    const ModelSpec m2 = make_m2();
    const PosteriorGrid grid = PosteriorGrid::uniform(41, 41);
    const RSTable t1 = iterate_RS(m2, grid, 1e-9, 300, 1);
    const RSTable t8 = iterate_RS(m2, grid, 1e-9, 300, 8);
    CHECK(t1.R == t8.R);
    CHECK(t1.S == t8.S);
    CHECK(t1.iterations == t8.iterations);
}

TEST_CASE("grid validation") {
    CHECK_THROWS_AS(PosteriorGrid::uniform(1, 5), std::invalid_argument);
    const ModelSpec m2 = make_m2();
    PosteriorGrid bad = PosteriorGrid::uniform(5, 5);
    bad.alpha_nodes.back() = 0.9;
    CHECK_THROWS_AS(static_cast<void>(iterate_RS(m2, bad, 1e-9, 10)), std::invalid_argument);
}
