#pragma once

#include "disorder/detect.hpp"
#include "disorder/doublestop.hpp"
#include "disorder/model.hpp"
#include "disorder/segment.hpp"

#include <nlohmann/json_fwd.hpp>

#include <map>
#include <string>
#include <vector>

namespace disorder {

// Posteriors by direct summation over switch placements (j, k) with
// closed-form geometric tails. Deliberately brute force; the recursive
// filter is tested against this.
struct ExactPosteriors {
    double pi1 = 0.0;
    double pi2 = 0.0;
    double pi12 = 0.0;
    std::vector<double> pinm; // index m: P(theta1 = m, theta2 > n | F_n)
    double S = 0.0;
};

ExactPosteriors bayes_filter_exact(const ModelSpec& model, const TrajectoryPrefix& prefix,
                                   long max_len = 10);

// Events about the switch moments, conditioned on the prefix.
enum class DisorderEvent {
    EqualAfterNext,     // theta1 = theta2 > n+1
    SeparatedAfterNext, // theta2 > theta1 > n+1
    FirstByNext,        // theta1 <= n+1
    FirstOnlyAtNext,    // theta1 <= n+1 < theta2
    SecondByNext,       // theta2 <= n+1
    EqualAfterNow,      // theta1 = theta2 > n
    SeparatedAfterNow,  // theta2 > theta1 > n
    FirstOnlyNow,       // theta1 <= n < theta2
    AnyAfterNow,        // theta2 >= theta1 > n
};

double oracle_event_prob(const ModelSpec& model, const TrajectoryPrefix& prefix,
                         DisorderEvent event);

// P(theta1 = m, theta2 > q | F_n) for q >= m (q is n or n+1 in the tests).
double oracle_pinm(const ModelSpec& model, const TrajectoryPrefix& prefix, long m, long q);

// P(theta1 = m, theta2 = k | F_n) for 0 <= m <= k <= n.
double oracle_joint_at(const ModelSpec& model, const TrajectoryPrefix& prefix, long m, long k);

// The two independent code paths of the history-tree DP.
enum class DpMode { RawDensity, PosteriorRecursion };

struct DpNodeInfo {
    double value_togo = 0.0;
    double reward = 0.0;
    bool stop = false;
};

struct DpResult {
    long horizon = 0;
    double value = 0.0;
    // Populated only when node recording is requested; keyed by the
    // observation path after x_0.
    std::map<std::vector<std::size_t>, DpNodeInfo> nodes;
};

// Optimal stopping of the between-switches reward over full observation
// histories, tau <= horizon. Guarded: |E|^horizon <= 10^7.
DpResult dp_detect(const ModelSpec& model, long horizon, DpMode mode = DpMode::RawDensity,
                   bool record_nodes = false);

// Optimal compound stopping (tau <= sigma <= horizon) of the exact-hit
// reward over full histories. Same guard.
DpResult dp_double(const ModelSpec& model, long horizon, DpMode mode = DpMode::RawDensity,
                   bool record_nodes = false);

// Horizon-truncated backward induction of the reduced two-stage recursions
// on E^2 (independent of the fixed-point solver path).
struct ReducedD00Dp {
    long horizon = 0;
    std::vector<double> r;     // (t,u), horizon steps remaining
    std::vector<double> R_bar; // t
    std::vector<double> v;     // (t,u), horizon-1 steps remaining
    double eta0 = 0.0;         // value of first-stopping at time zero
    double continuation = 0.0; // value of deferring the first stop
    double value = 0.0;
};

ReducedD00Dp reduced_d00_dp(const ModelSpec& model, long horizon);

// Formula arbitration: each documented discrepancy is scored against the
// history-tree DP and the smaller gap wins.
struct VerdictEntry {
    std::string id;
    std::string description;
    std::string variant_a; // the commonly printed form
    std::string variant_b; // the derivation-consistent form
    double value_a = 0.0;
    double value_b = 0.0;
    double dp_value = 0.0;
    double gap_a = 0.0;
    double gap_b = 0.0;
    std::string winner; // "a", "b" or "tie"
};

std::vector<VerdictEntry> oracle_verdict(const ModelSpec& model, long horizon);
nlohmann::ordered_json verdict_to_json(const ModelSpec& model, long horizon,
                               const std::vector<VerdictEntry>& entries);

} // namespace disorder
