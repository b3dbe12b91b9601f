#pragma once

#include "disorder/model.hpp"
#include "disorder/rng.hpp"

#include <iosfwd>
#include <utility>
#include <vector>

namespace disorder {

// One simulated run: the switch moments, the spliced observation path
// x_0..x_horizon, and the regime that produced each observation
// (0 before theta1, 1 in [theta1, theta2), 2 from theta2 on).
struct SimulationRecord {
    long theta1 = 0;
    long theta2 = 0;
    std::vector<std::size_t> observations;
    std::vector<int> regimes;
};

// theta1 ~ the geometric-at-zero prior, theta2 | theta1 likewise shifted.
std::pair<long, long> draw_disorders(const PriorParams& prior, std::mt19937_64& eng);

SimulationRecord simulate(const ModelSpec& model, long horizon, std::mt19937_64& eng);

// Same splicing with the switch moments pinned (tests, conditional checks).
SimulationRecord simulate_given(const ModelSpec& model, long horizon, long theta1, long theta2,
                                std::mt19937_64& eng);

// CSV columns: run,theta1,theta2,n,x_n,regime.
void write_batch_csv(std::ostream& os, const ModelSpec& model,
                     const std::vector<SimulationRecord>& batch);

} // namespace disorder
