#include "disorder/simulate.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace disorder {

namespace {

// Number of extra steps until a q-success under continuation probability p,
// drawn by inverse transform: smallest j >= 1 with 1 - p^j >= u.
long shifted_geometric(double p, std::mt19937_64& eng) {
    if (p <= 0.0) return 1;
    const double u = 1.0 - uniform01(eng); // in (0, 1]
    const double j = std::floor(std::log(u) / std::log(p));
    return 1 + static_cast<long>(std::max(0.0, j));
}

std::size_t draw_from_row(const ModelSpec& model, const Kernel& k, std::size_t from,
                          std::mt19937_64& eng) {
    const double u = uniform01(eng);
    double cum = 0.0;
    const std::size_t n = model.n_states();
    for (std::size_t y = 0; y + 1 < n; ++y) {
        cum += k(from, y) * model.mu(y);
        if (u < cum) return y;
    }
    return n - 1;
}

} // namespace

std::pair<long, long> draw_disorders(const PriorParams& prior, std::mt19937_64& eng) {
    long theta1 = 0;
    if (uniform01(eng) >= prior.pi) theta1 = shifted_geometric(prior.p1, eng);
    long theta2 = theta1;
    if (uniform01(eng) >= prior.rho) theta2 = theta1 + shifted_geometric(prior.p2, eng);
    return {theta1, theta2};
}

SimulationRecord simulate_given(const ModelSpec& model, long horizon, long theta1, long theta2,
                                std::mt19937_64& eng) {
    if (horizon < 1) throw std::invalid_argument("simulate: horizon must be >= 1");
    if (theta1 < 0 || theta2 < theta1)
        throw std::invalid_argument("simulate: need 0 <= theta1 <= theta2");

    SimulationRecord rec;
    rec.theta1 = theta1;
    rec.theta2 = theta2;
    rec.observations.reserve(static_cast<std::size_t>(horizon) + 1);
    rec.regimes.reserve(static_cast<std::size_t>(horizon) + 1);

    auto regime_at = [&](long n) { return n < theta1 ? 0 : (n < theta2 ? 1 : 2); };

    rec.observations.push_back(model.x0);
    rec.regimes.push_back(regime_at(0));
    // Each new segment conditions on the last emitted state, so one chain
    // with a switching kernel realizes the spliced process.
    for (long n = 1; n <= horizon; ++n) {
        const Kernel& k = model.kernel(regime_at(n));
        rec.observations.push_back(draw_from_row(model, k, rec.observations.back(), eng));
        rec.regimes.push_back(regime_at(n));
    }
    return rec;
}

SimulationRecord simulate(const ModelSpec& model, long horizon, std::mt19937_64& eng) {
    const auto [theta1, theta2] = draw_disorders(model.prior, eng);
    return simulate_given(model, horizon, theta1, theta2, eng);
}

void write_batch_csv(std::ostream& os, const ModelSpec& model,
                     const std::vector<SimulationRecord>& batch) {
    os << "run,theta1,theta2,n,x_n,regime\n";
    for (std::size_t r = 0; r < batch.size(); ++r) {
        const SimulationRecord& rec = batch[r];
        for (std::size_t n = 0; n < rec.observations.size(); ++n)
            os << r << "," << rec.theta1 << "," << rec.theta2 << "," << n << ","
               << model.space.points[rec.observations[n]] << "," << rec.regimes[n] << "\n";
    }
}

} // namespace disorder
