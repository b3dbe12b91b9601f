#pragma once

#include "disorder/model.hpp"

namespace disorder {

// Observation prefix x_0..x_n starting at the model's initial state.
struct TrajectoryPrefix {
    std::vector<std::size_t> states;

    std::size_t length() const { return states.empty() ? 0 : states.size() - 1; }
};

// Joint density of the prefix split by where the two switches sit relative
// to n. Geometric tails over placements beyond n are summed in closed form,
// so the components are exact; their sum is the path normalizer S_n.
struct SegmentDensityBundle {
    double both_before_n = 0.0; // theta1 <= theta2 <= n
    double first_only = 0.0;    // theta1 <= n < theta2
    double equal_after_n = 0.0; // theta1 = theta2 > n
    double both_after_n = 0.0;  // n < theta1 < theta2

    double sum() const { return both_before_n + first_only + equal_after_n + both_after_n; }
};

SegmentDensityBundle segment_densities(const ModelSpec& model, const TrajectoryPrefix& prefix);

// Log-space variant for prefixes long enough to underflow the linear path.
// Components are natural logs (-inf where the linear component is 0).
struct LogSegmentDensityBundle {
    double both_before_n;
    double first_only;
    double equal_after_n;
    double both_after_n;

    double log_sum() const;
};

LogSegmentDensityBundle log_segment_densities(const ModelSpec& model,
                                              const TrajectoryPrefix& prefix);

// S_n: S_0 = 1, otherwise the bundle sum.
double normalizer_S(const ModelSpec& model, const TrajectoryPrefix& prefix);
double log_normalizer_S(const ModelSpec& model, const TrajectoryPrefix& prefix);

// One-step predictive mixture density of the next observation given the
// current state x and posterior weights (alpha, beta, gamma):
//   (1-alpha) p1 f0_x(y)
//   + [p2 (alpha-beta) + q1 (1-alpha-gamma)] f1_x(y)
//   + [q2 alpha + p2 beta + q1 gamma] f2_x(y)
// Requires 0 <= beta <= alpha <= 1 and 0 <= gamma <= 1-alpha.
double mixture_H(const ModelSpec& model, std::size_t x, std::size_t y, double alpha,
                 double beta, double gamma);

} // namespace disorder
