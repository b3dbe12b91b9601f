#include "disorder/eval.hpp"
#include "disorder/oracle.hpp"

#include <nlohmann/json.hpp>

#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"

using namespace disorder;
using namespace disorder::testing;

namespace {

double fixed_n_exact(const PriorParams& pr, long n) {
    // P(theta1 <= n < theta2), independent of observations
    double p = 0.0;
    for (long j = 0; j <= n; ++j)
        p += prior_theta1_pmf(pr, j) * (1.0 - pr.rho) *
             std::pow(pr.p2, static_cast<double>(n - j));
    return p;
}

} // namespace

TEST_CASE("always-stop-at-zero recovers the prior gap mass") {
    ModelSpec m = make_m2();
    m.prior.pi = 0.4;
    m.prior.rho = 0.0;
    const EvalReport rep = evaluate_detect(m, detect_rule_stop_at(0), 100000, 64, 7);
    CHECK(std::abs(rep.estimate - 0.4) <= 3.29 * rep.std_error);
    CHECK(rep.successes == static_cast<long>(rep.estimate * 100000 + 0.5));
}

TEST_CASE("never stopping never succeeds") {
    const EvalReport rep = evaluate_detect(make_m2(), detect_rule_never(), 5000, 32, 7);
    CHECK(rep.estimate == 0.0);
    CHECK(rep.ci99.lo == 0.0);
}

TEST_CASE("fixed-epoch success equals the closed-form prior sum") {
    const ModelSpec m2 = make_m2();
    const double exact = fixed_n_exact(m2.prior, 2);
    const EvalReport rep = evaluate_detect(m2, detect_rule_stop_at(2), 100000, 96, 11);
    CHECK(std::abs(rep.estimate - exact) <= 3.29 * rep.std_error);
}

TEST_CASE("reports are reproducible across thread counts") {
    const ModelSpec m2 = make_m2();
    const auto rules = detect_baselines();
    const auto r1 = evaluate_detect_many(m2, rules, 20000, 64, 3, 1);
    const auto r8 = evaluate_detect_many(m2, rules, 20000, 64, 3, 8);
    REQUIRE(r1.size() == r8.size());
    for (std::size_t i = 0; i < r1.size(); ++i) {
        CHECK(r1[i].successes == r8[i].successes);
        CHECK(r1[i].estimate == r8[i].estimate);
    }
    // single-rule evaluation sees the same trajectories
    const EvalReport single = evaluate_detect(m2, rules[2], 20000, 64, 3);
    CHECK(single.successes == r1[2].successes);
}

TEST_CASE("confidence intervals cover a known value") {
    const ModelSpec m2 = make_m2();
    const double exact = fixed_n_exact(m2.prior, 2);
    int covered = 0;
    for (int experiment = 0; experiment < 100; ++experiment) {
        const EvalReport rep = evaluate_detect(m2, detect_rule_stop_at(2), 2000, 64,
                                               static_cast<std::uint64_t>(experiment));
        if (rep.ci99.lo <= exact && exact <= rep.ci99.hi) ++covered;
    }
    CHECK(covered >= 95);
}

TEST_CASE("solver policy estimate matches its reported value") {
    const ModelSpec m2 = make_m2();
    const DetectPolicy policy = solve_detect(m2, PosteriorGrid::uniform(101, 101), 1e-9);
    const EvalReport rep =
        evaluate_detect(m2, detect_rule_from_policy(policy), 30000, 128, 13, 4);
    CHECK(std::abs(rep.estimate - policy.value_at_x0) <= 3.29 * rep.std_error);
    CHECK_FALSE(rep.horizon_warning);
}

TEST_CASE("d00 solver beats a naive threshold on separated kernels") {
    ModelSpec m = make_model({{0.9, 0.1}, {0.2, 0.8}}, {{0.5, 0.5}, {0.5, 0.5}},
                             {{0.05, 0.95}, {0.9, 0.1}}, {0.0, 0.3, 0.6, 0.6});
    const D00Policy policy = solve_d00(m, 1e-11);
    std::vector<D00Rule> rules{d00_rule_from_policy(policy), d00_rule_threshold(0.5)};
    const auto reps = evaluate_d00_many(m, rules, 30000, 64, 17, 4);
    CHECK(reps[0].estimate > reps[1].estimate);
}

TEST_CASE("evaluate validates its inputs and flags short horizons") {
    const ModelSpec m2 = make_m2();
    CHECK_THROWS_AS(
        static_cast<void>(evaluate_detect(m2, detect_rule_never(), 0, 32, 1)),
        std::invalid_argument);
    const EvalReport rep = evaluate_detect(m2, detect_rule_stop_at(0), 100, 8, 1);
    CHECK(rep.horizon_warning);
    CHECK(rep.p_theta2_beyond > 0.001);
}

TEST_CASE("report serialization") {
    const ModelSpec m2 = make_m2();
    const EvalReport rep = evaluate_detect(m2, detect_rule_stop_at(1), 500, 32, 5);
    const nlohmann::json j = report_to_json(rep);
    CHECK(j.at("schema") == 1);
    CHECK(j.at("kind") == "eval-report");
    CHECK(j.at("runs") == 500);
    CHECK(j.at("ci99").size() == 2);
    const std::string row = report_to_csv_row(rep);
    CHECK(row.find("baseline:fixed-n:1") == 0);
    CHECK(report_csv_header().find("estimate") != std::string::npos);
}
