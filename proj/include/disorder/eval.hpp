#pragma once

#include "disorder/detect.hpp"
#include "disorder/doublestop.hpp"
#include "disorder/filter.hpp"
#include "disorder/model.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace disorder {

// A detection rule maps a filter trace to the stopping index in
// [0, horizon], or -1 when it never triggers within the horizon.
struct DetectRule {
    std::string id;
    std::function<long(const ModelSpec&, const std::vector<PosteriorState>&)> decide;
};

// A compound rule returns (tau, sigma); -1 entries mean the corresponding
// stage never triggered within the horizon.
struct D00Rule {
    std::string id;
    std::function<std::pair<long, long>(const ModelSpec&, const std::vector<PosteriorState>&)>
        decide;
};

struct Interval {
    double lo = 0.0, hi = 0.0;
};

struct EvalReport {
    std::string policy_id;
    std::string model_id;
    std::uint64_t seed = 0;
    long runs = 0;
    long horizon = 0;
    long successes = 0;
    double estimate = 0.0;
    double std_error = 0.0;
    Interval ci99;
    bool horizon_warning = false;     // P(theta2 > horizon) >= 0.001
    double p_theta2_beyond = 0.0;
};

// Monte Carlo success frequency of each rule over shared trajectories (one
// simulation per run, every rule applied to the same trace). Deterministic
// given (model, rules, runs, horizon, seed) for any thread count.
std::vector<EvalReport> evaluate_detect_many(const ModelSpec& model,
                                             const std::vector<DetectRule>& rules, long runs,
                                             long horizon, std::uint64_t seed, int threads = 1);
std::vector<EvalReport> evaluate_d00_many(const ModelSpec& model,
                                          const std::vector<D00Rule>& rules, long runs,
                                          long horizon, std::uint64_t seed, int threads = 1);

EvalReport evaluate_detect(const ModelSpec& model, const DetectRule& rule, long runs,
                           long horizon, std::uint64_t seed, int threads = 1);
EvalReport evaluate_d00(const ModelSpec& model, const D00Rule& rule, long runs, long horizon,
                        std::uint64_t seed, int threads = 1);

// Solver-policy rules.
DetectRule detect_rule_from_policy(const DetectPolicy& policy);
D00Rule d00_rule_from_policy(const D00Policy& policy);

// Baselines: fixed epochs, thresholds on the between-switches posterior,
// and a trailing-peak rule.
DetectRule detect_rule_stop_at(long n);
DetectRule detect_rule_never();
DetectRule detect_rule_threshold(double level);
DetectRule detect_rule_trailing_peak();
std::vector<DetectRule> detect_baselines();

D00Rule d00_rule_fixed(long n1, long n2);
D00Rule d00_rule_threshold(double level);
std::vector<D00Rule> d00_baselines();

nlohmann::ordered_json report_to_json(const EvalReport& report);
std::string report_csv_header();
std::string report_to_csv_row(const EvalReport& report);

} // namespace disorder
