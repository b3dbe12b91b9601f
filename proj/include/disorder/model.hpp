#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace disorder {

// State space E with reference measure mu. Finite chains use counting
// measure (all weights 1); quadrature-discretized continuous models carry
// the quadrature weights here so kernels stay densities either way.
struct StateSpace {
    std::vector<std::string> points; // unique state identifiers
    std::vector<double> weights;     // mu mass per point, all > 0

    std::size_t size() const { return points.size(); }
};

// One-step transition density f_x(y) against mu, stored row-major:
// density[from * n + to].
struct Kernel {
    std::size_t n = 0;
    std::vector<double> density;

    double operator()(std::size_t from, std::size_t to) const {
        return density[from * n + to];
    }
    double& at(std::size_t from, std::size_t to) { return density[from * n + to]; }
};

// Geometric priors of the two switch moments:
//   P(theta1 = 0) = pi,  P(theta1 = j) = (1-pi) p1^{j-1} q1  (j >= 1)
//   P(theta2 = j | theta1 = j) = rho,
//   P(theta2 = k | theta1 = j) = (1-rho) p2^{k-j-1} q2       (k > j)
struct PriorParams {
    double pi = 0.0;
    double rho = 0.0;
    double p1 = 0.0;
    double p2 = 0.0;

    double q1() const { return 1.0 - p1; }
    double q2() const { return 1.0 - p2; }
};

struct ModelSpec {
    StateSpace space;
    Kernel f0, f1, f2; // pre-switch, middle, post-switch kernels
    PriorParams prior;
    std::size_t x0 = 0; // index of the initial state

    std::size_t n_states() const { return space.size(); }
    double mu(std::size_t i) const { return space.weights[i]; }
    const Kernel& kernel(int regime) const {
        return regime == 0 ? f0 : (regime == 1 ? f1 : f2);
    }
};

struct ValidationReport {
    std::vector<std::string> issues;

    bool ok() const { return issues.empty(); }
};

// Report-style validation; lists every violated invariant.
ValidationReport validate(const ModelSpec& model);

// P(theta1 = j). Throws std::invalid_argument for j < 0.
double prior_theta1_pmf(const PriorParams& prior, long j);

// P(theta1 = j, theta2 = k). Throws std::invalid_argument unless 0 <= j <= k.
double prior_joint_pmf(const PriorParams& prior, long j, long k);

// Closed-form tails P(theta1 > j) and P(theta2 > n), j, n >= -1.
double prior_theta1_tail(const PriorParams& prior, long j);
double prior_theta2_tail(const PriorParams& prior, long n);

// Content fingerprint used to tie policy artifacts to the model they solve.
std::string model_fingerprint(const ModelSpec& model);

} // namespace disorder
