#pragma once

#include "disorder/filter.hpp"
#include "disorder/model.hpp"

#include <nlohmann/json_fwd.hpp>

#include <optional>
#include <vector>

namespace disorder {

// First-stop recursion flavour: the proof-consistent one (payoff ratio
// f1/f0, continuation against f0) or the one printed in the theorem
// statement (ratio f2/f1, continuation against f1).
enum class D00Variant { Proof, Statement };

// Fixed point of the second-stop problem. All tables live on E or E^2, so
// on finite spaces they are exact up to the iteration residual.
struct SecondStopTable {
    std::size_t n_states = 0;
    std::vector<double> r_star; // (t,u): normalized second-stop value
    std::vector<double> R_bar;  // t: sum_s r*(t,s) f1_t(s) mu(s)
    std::vector<double> R_star; // t: p2 * R_bar
    std::vector<double> R_rho;  // (t,u): max{rho f2/f1, q2 (1-rho) R_bar(u)}
    int iterations = 0;
    double delta = 0.0;
    bool converged = false;

    std::size_t index(std::size_t t, std::size_t u) const { return t * n_states + u; }
};

struct FirstStopTable {
    std::size_t n_states = 0;
    D00Variant variant = D00Variant::Proof;
    std::vector<double> v_star;         // (t,u)
    std::vector<std::uint8_t> stop_set; // (t,u): first-stop region
    // Value of declaring the first switch at time zero: the better of the
    // coincident claim (pi rho) and running the second stage from there.
    double eta0_x0 = 0.0;
    double continuation_x0 = 0.0; // value of deferring the first stop
    double value_x0 = 0.0;        // max of the two
    bool tau0_immediate = false;
    bool sigma0_immediate = false;
    int iterations = 0;
    double delta = 0.0;
    bool converged = false;
};

SecondStopTable iterate_r(const ModelSpec& model, double tol, int max_iter = 10000);

FirstStopTable iterate_v(const ModelSpec& model, const SecondStopTable& second, double tol,
                         int max_iter = 10000, D00Variant variant = D00Variant::Proof);

struct D00Policy {
    SecondStopTable second;
    FirstStopTable first;
    std::string model_id;
};

D00Policy solve_d00(const ModelSpec& model, double tol, int max_iter = 10000,
                    D00Variant variant = D00Variant::Proof);

// Printed second-stop rule: first n > m with f2/f1 at (X_{n-1}, X_n) at or
// above R*(X_n). Empty when the trace ends first (reported, not silent).
std::optional<long> second_stop_rule(const ModelSpec& model, const SecondStopTable& table,
                                     const std::vector<PosteriorState>& trace, long m);

// Declare the switches coincident at the first stop m >= 1? True when the
// rho-branch of R_rho attains the max at (X_{m-1}, X_m); ties stop.
bool coincident_stop(const ModelSpec& model, const SecondStopTable& table, std::size_t t,
                     std::size_t u);

// Composed run of the policy on a filter trace: first stop (with the
// time-zero override), then the second stage. Either stop may exhaust the
// horizon, reported as nullopt.
struct D00Stops {
    std::optional<long> tau;
    std::optional<long> sigma;
};
D00Stops apply_d00_policy(const ModelSpec& model, const D00Policy& policy,
                          const std::vector<PosteriorState>& trace);

nlohmann::ordered_json d00_policy_to_json(const ModelSpec& model, const D00Policy& policy, double tol);
D00Policy d00_policy_from_json(const nlohmann::json& j);

} // namespace disorder
