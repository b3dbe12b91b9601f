#pragma once

#include "disorder/model.hpp"

#include <iosfwd>
#include <vector>

namespace disorder {

// Markov-function state (X_{n-1}, X_n, Pi1_n, Pi2_n, Pi12_n) driving both
// solvers. At n = 0 both state slots hold x_0.
struct PosteriorState {
    std::size_t x_prev = 0;
    std::size_t x_curr = 0;
    double pi1 = 0.0;  // P(theta1 <= n | F_n)
    double pi2 = 0.0;  // P(theta2 <= n | F_n)
    double pi12 = 0.0; // P(theta1 = theta2 > n | F_n)
    long n = 0;
};

// Posterior of {theta1 = m, theta2 > n}, tracked from n = m onward.
struct PinmState {
    long m = 0;
    double value = 0.0;
};

struct PosteriorTriple {
    double pi1, pi2, pi12;
};

// Boundary condition (pi, pi*rho, (1-pi)*rho).
PosteriorTriple initial_posteriors(const PriorParams& prior);

PosteriorState make_initial_state(const ModelSpec& model);

// One recursion step on observing y. Throws ZeroLikelihoodError when the
// observation is impossible under the model (mixture density 0).
PosteriorState filter_step(const ModelSpec& model, const PosteriorState& s, std::size_t y);

// Pi_{mm} at the hypothesized switch time m = s.n >= 1.
PinmState pinm_start(const ModelSpec& model, const PosteriorState& s);

// Pi_{m,n+1} from Pi_{mn}; s is the state at n, y the next observation.
PinmState pinm_step(const ModelSpec& model, const PosteriorState& s, const PinmState& p,
                    std::size_t y);

// Full trace: trace[0] is the boundary state, trace[i] the state after
// observations[0..i-1].
std::vector<PosteriorState> run_filter(const ModelSpec& model,
                                       const std::vector<std::size_t>& observations);

// CSV columns: n,x_prev,x_curr,pi1,pi2,pi12[,pi_m<M>...] for each tracked m.
void write_trace_csv(std::ostream& os, const ModelSpec& model,
                     const std::vector<PosteriorState>& trace,
                     const std::vector<long>& tracked_m = {});

} // namespace disorder
