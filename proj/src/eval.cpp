#include "disorder/eval.hpp"

#include "disorder/io.hpp"
#include "disorder/rng.hpp"
#include "disorder/simulate.hpp"
#include "disorder/threading.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace disorder {

namespace {

constexpr double kZ99 = 2.576; // two-sided 99% normal quantile

template <typename Rules, typename Success>
std::vector<EvalReport> evaluate_core(const ModelSpec& model, const Rules& rules, long runs,
                                      long horizon, std::uint64_t seed, int threads,
                                      const Success& succeeded) {
    if (runs < 1) throw std::invalid_argument("evaluate: runs must be >= 1");
    if (horizon < 1) throw std::invalid_argument("evaluate: horizon must be >= 1");

    const std::size_t n_rules = rules.size();
    const int workers = std::max(1, threads);
    std::vector<std::vector<long>> counts(static_cast<std::size_t>(workers),
                                          std::vector<long>(n_rules, 0));
    const long chunk = (runs + workers - 1) / workers;

    parallel_for(static_cast<std::size_t>(workers), workers, [&](std::size_t w) {
        const long begin = static_cast<long>(w) * chunk;
        const long end = std::min(runs, begin + chunk);
        for (long r = begin; r < end; ++r) {
            auto eng = make_run_engine(seed, static_cast<std::uint64_t>(r));
            const SimulationRecord rec = simulate(model, horizon, eng);
            const std::vector<std::size_t> obs(rec.observations.begin() + 1,
                                               rec.observations.end());
            const std::vector<PosteriorState> trace = run_filter(model, obs);
            for (std::size_t p = 0; p < n_rules; ++p)
                if (succeeded(rules[p], rec, trace)) ++counts[w][p];
        }
    });

    const double p_beyond = prior_theta2_tail(model.prior, horizon);
    const std::string model_id = model_fingerprint(model);
    std::vector<EvalReport> reports(n_rules);
    for (std::size_t p = 0; p < n_rules; ++p) {
        long successes = 0;
        for (int w = 0; w < workers; ++w) successes += counts[static_cast<std::size_t>(w)][p];
        EvalReport& rep = reports[p];
        rep.policy_id = rules[p].id;
        rep.model_id = model_id;
        rep.seed = seed;
        rep.runs = runs;
        rep.horizon = horizon;
        rep.successes = successes;
        rep.estimate = static_cast<double>(successes) / static_cast<double>(runs);
        rep.std_error =
            std::sqrt(rep.estimate * (1.0 - rep.estimate) / static_cast<double>(runs));
        rep.ci99 = {std::max(0.0, rep.estimate - kZ99 * rep.std_error),
                    std::min(1.0, rep.estimate + kZ99 * rep.std_error)};
        rep.p_theta2_beyond = p_beyond;
        rep.horizon_warning = p_beyond >= 0.001;
    }
    return reports;
}

} // namespace

std::vector<EvalReport> evaluate_detect_many(const ModelSpec& model,
                                             const std::vector<DetectRule>& rules, long runs,
                                             long horizon, std::uint64_t seed, int threads) {
    return evaluate_core(model, rules, runs, horizon, seed, threads,
                         [&](const DetectRule& rule, const SimulationRecord& rec,
                             const std::vector<PosteriorState>& trace) {
                             const long tau = rule.decide(model, trace);
                             return tau >= 0 && rec.theta1 <= tau && tau < rec.theta2;
                         });
}

std::vector<EvalReport> evaluate_d00_many(const ModelSpec& model,
                                          const std::vector<D00Rule>& rules, long runs,
                                          long horizon, std::uint64_t seed, int threads) {
    return evaluate_core(model, rules, runs, horizon, seed, threads,
                         [&](const D00Rule& rule, const SimulationRecord& rec,
                             const std::vector<PosteriorState>& trace) {
                             const auto [tau, sigma] = rule.decide(model, trace);
                             return tau >= 0 && sigma >= 0 && tau == rec.theta1 &&
                                    sigma == rec.theta2;
                         });
}

EvalReport evaluate_detect(const ModelSpec& model, const DetectRule& rule, long runs,
                           long horizon, std::uint64_t seed, int threads) {
    return evaluate_detect_many(model, {rule}, runs, horizon, seed, threads).front();
}

EvalReport evaluate_d00(const ModelSpec& model, const D00Rule& rule, long runs, long horizon,
                        std::uint64_t seed, int threads) {
    return evaluate_d00_many(model, {rule}, runs, horizon, seed, threads).front();
}

DetectRule detect_rule_from_policy(const DetectPolicy& policy) {
    return {"solver:detect:" + std::string(policy.variant == DetectVariant::Proof ? "proof"
                                                                                  : "printed"),
            [policy](const ModelSpec& model, const std::vector<PosteriorState>& trace) -> long {
                if (policy.immediate_stop_at_zero) return 0;
                for (std::size_t i = 1; i < trace.size(); ++i) {
                    const PosteriorState& s = trace[i];
                    if (policy.stop(model, s.x_prev, s.x_curr, s.pi1, s.pi2)) return s.n;
                }
                return -1;
            }};
}

D00Rule d00_rule_from_policy(const D00Policy& policy) {
    return {"solver:d00:" + std::string(policy.first.variant == D00Variant::Proof
                                            ? "proof"
                                            : "statement"),
            [policy](const ModelSpec& model, const std::vector<PosteriorState>& trace) {
                const D00Stops stops = apply_d00_policy(model, policy, trace);
                return std::make_pair(stops.tau.value_or(-1), stops.sigma.value_or(-1));
            }};
}

DetectRule detect_rule_stop_at(long n) {
    std::ostringstream id;
    id << "baseline:fixed-n:" << n;
    return {id.str(), [n](const ModelSpec&, const std::vector<PosteriorState>& trace) -> long {
                return n < static_cast<long>(trace.size()) ? n : -1;
            }};
}

DetectRule detect_rule_never() {
    return {"baseline:never",
            [](const ModelSpec&, const std::vector<PosteriorState>&) -> long { return -1; }};
}

DetectRule detect_rule_threshold(double level) {
    std::ostringstream id;
    id << "baseline:threshold-z:" << format_double(level);
    return {id.str(),
            [level](const ModelSpec&, const std::vector<PosteriorState>& trace) -> long {
                for (const PosteriorState& s : trace)
                    if (s.pi1 - s.pi2 >= level) return s.n;
                return -1;
            }};
}

DetectRule detect_rule_trailing_peak() {
    return {"baseline:trailing-peak",
            [](const ModelSpec&, const std::vector<PosteriorState>& trace) -> long {
                for (std::size_t i = 1; i < trace.size(); ++i)
                    if (trace[i].pi1 - trace[i].pi2 < trace[i - 1].pi1 - trace[i - 1].pi2)
                        return trace[i].n;
                return -1;
            }};
}

std::vector<DetectRule> detect_baselines() {
    std::vector<DetectRule> rules;
    for (long n : {0L, 1L, 2L, 3L, 4L, 6L, 8L, 12L, 16L, 24L})
        rules.push_back(detect_rule_stop_at(n));
    for (double level : {0.3, 0.5, 0.7}) rules.push_back(detect_rule_threshold(level));
    rules.push_back(detect_rule_trailing_peak());
    return rules;
}

D00Rule d00_rule_fixed(long n1, long n2) {
    std::ostringstream id;
    id << "baseline:fixed-nm:" << n1 << "," << n2;
    return {id.str(),
            [n1, n2](const ModelSpec&, const std::vector<PosteriorState>& trace) {
                const long last = static_cast<long>(trace.size()) - 1;
                return std::make_pair(n1 <= last ? n1 : -1, n2 <= last ? n2 : -1);
            }};
}

D00Rule d00_rule_threshold(double level) {
    std::ostringstream id;
    id << "baseline:threshold-pp:" << format_double(level);
    return {id.str(),
            [level](const ModelSpec&, const std::vector<PosteriorState>& trace) {
                long tau = -1, sigma = -1;
                for (const PosteriorState& s : trace) {
                    if (tau < 0 && s.pi1 >= level) tau = s.n;
                    if (tau >= 0 && s.pi2 >= level) {
                        sigma = s.n;
                        break;
                    }
                }
                return std::make_pair(tau, sigma);
            }};
}

std::vector<D00Rule> d00_baselines() {
    std::vector<D00Rule> rules;
    const std::pair<long, long> pairs[] = {{0, 0}, {1, 2}, {2, 4}, {3, 6}, {4, 8}, {6, 12}};
    for (auto [a, b] : pairs) rules.push_back(d00_rule_fixed(a, b));
    for (double level : {0.3, 0.5, 0.7}) rules.push_back(d00_rule_threshold(level));
    return rules;
}

nlohmann::ordered_json report_to_json(const EvalReport& report) {
    nlohmann::ordered_json j;
    j["schema"] = 1;
    j["kind"] = "eval-report";
    j["policy"] = report.policy_id;
    j["model"] = report.model_id;
    j["seed"] = report.seed;
    j["runs"] = report.runs;
    j["horizon"] = report.horizon;
    j["successes"] = report.successes;
    j["estimate"] = report.estimate;
    j["std_error"] = report.std_error;
    j["ci99"] = {report.ci99.lo, report.ci99.hi};
    j["horizon_warning"] = report.horizon_warning;
    j["p_theta2_beyond_horizon"] = report.p_theta2_beyond;
    return j;
}

std::string report_csv_header() {
    return "policy,model,seed,runs,horizon,successes,estimate,std_error,ci99_lo,ci99_hi,"
           "horizon_warning";
}

std::string report_to_csv_row(const EvalReport& r) {
    std::ostringstream os;
    os << r.policy_id << "," << r.model_id << "," << r.seed << "," << r.runs << "," << r.horizon
       << "," << r.successes << "," << format_double(r.estimate) << ","
       << format_double(r.std_error) << "," << format_double(r.ci99.lo) << ","
       << format_double(r.ci99.hi) << "," << (r.horizon_warning ? 1 : 0);
    return os.str();
}

} // namespace disorder
