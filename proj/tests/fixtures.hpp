#pragma once

#include "disorder/model.hpp"
#include "disorder/rng.hpp"
#include "disorder/segment.hpp"

#include <cstdint>
#include <vector>

namespace disorder::testing {

inline Kernel make_kernel(std::vector<std::vector<double>> rows) {
    Kernel k;
    k.n = rows.size();
    for (const auto& row : rows) k.density.insert(k.density.end(), row.begin(), row.end());
    return k;
}

inline ModelSpec make_model(std::vector<std::vector<double>> f0,
                            std::vector<std::vector<double>> f1,
                            std::vector<std::vector<double>> f2, PriorParams prior,
                            std::size_t x0 = 0) {
    ModelSpec m;
    const std::size_t n = f0.size();
    for (std::size_t i = 0; i < n; ++i) {
        m.space.points.push_back(std::to_string(i));
        m.space.weights.push_back(1.0);
    }
    m.f0 = make_kernel(std::move(f0));
    m.f1 = make_kernel(std::move(f1));
    m.f2 = make_kernel(std::move(f2));
    m.prior = prior;
    m.x0 = x0;
    return m;
}

// Desk fixture used across the test suites: two states, counting measure,
// three clearly separated kernels.
inline ModelSpec make_m2() {
    return make_model({{0.9, 0.1}, {0.2, 0.8}}, {{0.5, 0.5}, {0.5, 0.5}},
                      {{0.1, 0.9}, {0.8, 0.2}}, {0.1, 0.25, 0.9, 0.8}, 0);
}

// All three regimes share one kernel: observations carry no information.
inline ModelSpec make_uninformative(PriorParams prior) {
    const std::vector<std::vector<double>> k = {{0.6, 0.4}, {0.3, 0.7}};
    return make_model(k, k, k, prior, 0);
}

// Random strictly-positive model on 2 or 3 states.
inline ModelSpec random_model(std::uint64_t seed, std::size_t n_states) {
    auto eng = make_run_engine(seed, 7777);
    auto row = [&](std::size_t n) {
        std::vector<double> r(n);
        double sum = 0.0;
        for (double& v : r) {
            v = 0.1 + uniform01(eng);
            sum += v;
        }
        for (double& v : r) v /= sum;
        return r;
    };
    auto kernel = [&](std::size_t n) {
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < n; ++i) rows.push_back(row(n));
        return rows;
    };
    PriorParams prior;
    prior.pi = 0.05 + 0.25 * uniform01(eng);
    prior.rho = 0.1 + 0.5 * uniform01(eng);
    prior.p1 = 0.5 + 0.4 * uniform01(eng);
    prior.p2 = 0.5 + 0.4 * uniform01(eng);
    return make_model(kernel(n_states), kernel(n_states), kernel(n_states), prior, 0);
}

// All observation strings of the given length over the model's states.
inline std::vector<std::vector<std::size_t>> all_strings(std::size_t n_states,
                                                         std::size_t length) {
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> cur(length, 0);
    while (true) {
        out.push_back(cur);
        std::size_t i = 0;
        for (; i < length; ++i) {
            if (++cur[i] < n_states) break;
            cur[i] = 0;
        }
        if (i == length) break;
    }
    return out;
}

inline TrajectoryPrefix prefix_of(const ModelSpec& model, const std::vector<std::size_t>& obs) {
    TrajectoryPrefix p;
    p.states.push_back(model.x0);
    p.states.insert(p.states.end(), obs.begin(), obs.end());
    return p;
}

} // namespace disorder::testing
