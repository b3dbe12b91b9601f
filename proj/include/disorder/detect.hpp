#pragma once

#include "disorder/model.hpp"

#include <nlohmann/json_fwd.hpp>

#include <functional>
#include <vector>

namespace disorder {

// Discretization of the (alpha, beta) posterior pair. The beta axis is
// indexed relative to alpha (node w stands for beta = w * alpha), which
// maps the triangle beta <= alpha onto a full rectangle: no node is ever
// outside the domain, interpolation weights stay positive, and the reward
// alpha - beta is bilinear in (alpha, w) and therefore reproduced exactly.
// gamma is implied as rho * (1 - alpha) throughout.
struct PosteriorGrid {
    std::vector<double> alpha_nodes;
    std::vector<double> beta_nodes; // ratio nodes w in [0, 1]

    static PosteriorGrid uniform(std::size_t n_alpha, std::size_t n_beta);
};

// The two candidate closed forms the paper leaves in tension: the
// derivation-consistent one and the one printed in the theorem statement.
enum class DetectVariant { Proof, Printed };

// Fixed-point tables of the stop-or-continue iteration. Q is the iterated
// combined value (monotone in the sweep count by construction); R and S are
// the decomposition tables maintained alongside it. Values are indexed
// (z, alpha-node, ratio-node): with transitions based at the latest
// observation the tables do not depend on the older state, so the older
// index is dropped from storage (queries still accept it).
struct RSTable {
    PosteriorGrid grid;
    std::size_t n_states = 0;
    double rho = 0.0;
    std::vector<double> R, S, Q;
    int iterations = 0;
    double delta = 0.0;
    bool converged = false;

    std::size_t index(std::size_t z, std::size_t ai, std::size_t bj) const {
        return (z * grid.alpha_nodes.size() + ai) * grid.beta_nodes.size() + bj;
    }
};

struct RsPair {
    double r = 0.0, s = 0.0;
};

// Stopping reward alpha - beta. Rejects pairs outside 0 <= beta <= alpha <= 1.
double reward_h(double alpha, double beta);

// Bilinear table lookups at (z, alpha, beta); queries are clamped to the
// triangle.
RsPair rs_interpolate(const RSTable& table, std::size_t z, double alpha, double beta);
double q_interpolate(const RSTable& table, std::size_t z, double alpha, double beta);

// One-step continuation value from iteration-k tables at the given state,
// assembled from the decomposition integrals (R against f0, S against f1).
// y is accepted for interface parity and unused (latest-observation base).
double bellman_T(const ModelSpec& model, const RSTable& table, std::size_t y, std::size_t z,
                 double alpha, double beta);

// Same continuation value assembled from the combined table; this is the
// operator the sweep itself applies, so max{h, q_continuation} reproduces
// the next sweep's Q exactly.
double q_continuation(const ModelSpec& model, const RSTable& table, std::size_t z, double alpha,
                      double beta);

// Value iteration until the sup-norm change of the combined value drops to
// tol or max_iter sweeps elapse (converged flag records which).
using SweepObserver = std::function<void(int iteration, const std::vector<double>& q_values)>;
RSTable iterate_RS(const ModelSpec& model, const PosteriorGrid& grid, double tol, int max_iter,
                   int threads = 1, const SweepObserver& on_sweep = nullptr);

// Exact (grid-free) finite-depth recursion; cost grows as |E|^k. Used by
// oracle-equivalence tests and formula arbitration.
RsPair detect_rs_exact(const ModelSpec& model, int k, std::size_t z, double alpha, double beta);
double detect_q_exact(const ModelSpec& model, int k, std::size_t z, double alpha, double beta);

// Candidate continuation value at time zero, unrolled from the boundary
// posteriors with depth-k exact tables (k >= 1).
double detect_v0_exact(const ModelSpec& model, int k, DetectVariant variant);

struct DetectPolicy {
    RSTable tables;
    DetectVariant variant = DetectVariant::Proof;
    double v0 = 0.0;             // continuation value at time zero
    double stop_now_value = 0.0; // the variant's immediate-stop constant
    double value_at_x0 = 0.0;    // max of the two
    bool immediate_stop_at_zero = false;
    std::string model_id;

    // Stop-set membership of a state (ties stop). y unused, see RSTable.
    bool stop(const ModelSpec& model, std::size_t y, std::size_t z, double alpha,
              double beta) const;
};

DetectPolicy solve_detect(const ModelSpec& model, const PosteriorGrid& grid, double tol,
                          int max_iter = 10000, DetectVariant variant = DetectVariant::Proof,
                          int threads = 1);

nlohmann::ordered_json detect_policy_to_json(const ModelSpec& model, const DetectPolicy& policy,
                                     double tol);
DetectPolicy detect_policy_from_json(const nlohmann::json& j);

} // namespace disorder
