#include "disorder/errors.hpp"
#include "disorder/oracle.hpp"

#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"

using namespace disorder;
using namespace disorder::testing;

TEST_CASE("exact posteriors at the boundary") {
    const ModelSpec m2 = make_m2();
    TrajectoryPrefix root;
    root.states.push_back(m2.x0);
    const ExactPosteriors e = bayes_filter_exact(m2, root);
    CHECK(e.pi1 == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(e.pi2 == doctest::Approx(0.025).epsilon(1e-14));
    CHECK(e.pi12 == doctest::Approx(0.225).epsilon(1e-14));
    CHECK(e.S == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("certain switches dominate every posterior") {
    ModelSpec m = make_m2();
    m.prior.pi = 1.0;
    m.prior.rho = 1.0;
    for (const auto& obs : all_strings(2, 4)) {
        const ExactPosteriors e = bayes_filter_exact(m, prefix_of(m, obs));
        CHECK(e.pi1 == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(e.pi2 == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(e.pi12 == doctest::Approx(0.0).epsilon(1e-14));
    }
}

TEST_CASE("history-tree probabilities conserve mass") {
    std::vector<ModelSpec> models{make_m2()};
    for (std::uint64_t s = 0; s < 5; ++s) models.push_back(random_model(s, 3));
    for (const ModelSpec& m : models) {
        const std::size_t ns = m.n_states();
        for (std::size_t len = 1; len <= 5; ++len) {
            double total = 0.0;
            for (const auto& obs : all_strings(ns, len)) {
                double mu_prod = 1.0;
                for (std::size_t y : obs) mu_prod *= m.mu(y);
                total += bayes_filter_exact(m, prefix_of(m, obs)).S * mu_prod;
            }
            CHECK(std::abs(total - 1.0) <= 1e-10);
        }
    }
}

TEST_CASE("detection DP trivial horizons and degenerate priors") {
    const ModelSpec m2 = make_m2();
    CHECK(dp_detect(m2, 0).value ==
          doctest::Approx(m2.prior.pi * (1.0 - m2.prior.rho)).epsilon(1e-14));

    ModelSpec no_gap = make_m2();
    no_gap.prior.pi = 0.0;
    no_gap.prior.rho = 1.0;
    for (long n : {0L, 3L, 6L}) CHECK(dp_detect(no_gap, n).value <= 1e-14);
}

TEST_CASE("detection DP value is monotone with tail-bounded increments") {
    const ModelSpec m2 = make_m2();
    double prev = dp_detect(m2, 0).value;
    for (long n = 1; n <= 8; ++n) {
        const double cur = dp_detect(m2, n).value;
        CHECK(cur >= prev - 1e-13);
        CHECK(cur - prev <= prior_theta2_tail(m2.prior, n - 1) + 1e-13);
        prev = cur;
    }
}

TEST_CASE("raw-density and posterior-recursion DP paths agree") {
    std::vector<ModelSpec> models{make_m2()};
    for (std::uint64_t s = 0; s < 4; ++s) models.push_back(random_model(s, 2));
    for (std::uint64_t s = 4; s < 6; ++s) models.push_back(random_model(s, 3));
    for (const ModelSpec& m : models) {
        const long n = m.n_states() == 2 ? 6 : 5;
        CHECK(std::abs(dp_detect(m, n, DpMode::RawDensity).value -
                       dp_detect(m, n, DpMode::PosteriorRecursion).value) <= 1e-10);
        CHECK(std::abs(dp_double(m, n, DpMode::RawDensity).value -
                       dp_double(m, n, DpMode::PosteriorRecursion).value) <= 1e-10);
    }
}

TEST_CASE("double DP with certain immediate switches") {
    ModelSpec m = make_m2();
    m.prior.pi = 1.0;
    m.prior.rho = 1.0;
    CHECK(dp_double(m, 4).value == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("uninformative observations reduce the double DP to the prior") {
    const ModelSpec m = make_uninformative({0.15, 0.3, 0.6, 0.55});
    const long horizon = 8;
    double best = 0.0;
    for (long j = 0; j <= horizon; ++j)
        for (long k = j; k <= horizon; ++k)
            best = std::max(best, prior_joint_pmf(m.prior, j, k));
    CHECK(dp_double(m, horizon).value == doctest::Approx(best).epsilon(1e-11));
}

TEST_CASE("reduced two-stage DP equals the full-history double DP") {
    std::vector<ModelSpec> models{make_m2()};
    for (std::uint64_t s = 0; s < 4; ++s) models.push_back(random_model(s, 2));
    for (std::uint64_t s = 10; s < 12; ++s) models.push_back(random_model(s, 3));
    for (const ModelSpec& m : models) {
        const long n = m.n_states() == 2 ? 6 : 5;
        const double full = dp_double(m, n).value;
        const double reduced = reduced_d00_dp(m, n).value;
        CHECK(std::abs(full - reduced) <= 1e-10);
    }
}

TEST_CASE("frozen reference values on the desk fixture") {
    // Recorded from the verified enumeration DP; guards both problems
    // against silent regressions.
    const ModelSpec m2 = make_m2();
    CHECK(dp_detect(m2, 6).value == doctest::Approx(0.2701782248081680).epsilon(1e-10));
    CHECK(dp_double(m2, 6).value == doctest::Approx(0.0772624312000446).epsilon(1e-10));
}

TEST_CASE("node recording exposes per-history stop decisions") {
    const ModelSpec m2 = make_m2();
    const DpResult res = dp_detect(m2, 3, DpMode::RawDensity, true);
    REQUIRE(res.nodes.count({}) == 1);
    CHECK(res.nodes.at({}).value_togo == doctest::Approx(res.value).epsilon(1e-14));
    CHECK(res.nodes.size() == 1 + 2 + 4 + 8);
    for (const auto& [path, info] : res.nodes) {
        CHECK(info.value_togo >= info.reward - 1e-14);
        if (path.size() == 3) CHECK(info.stop);
    }
}

TEST_CASE("guards reject oversized enumerations") {
    const ModelSpec big = random_model(0, 3);
    CHECK_THROWS_AS(static_cast<void>(dp_detect(big, 20)), TreeTooLargeError);
    const ModelSpec m2 = make_m2();
    std::vector<std::size_t> obs(12, 0);
    CHECK_THROWS_AS(static_cast<void>(bayes_filter_exact(m2, prefix_of(m2, obs))),
                    PrefixTooLongError);
}
