#include "disorder/segment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace disorder {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_prefix(const ModelSpec& model, const TrajectoryPrefix& prefix) {
    if (prefix.states.empty())
        throw std::invalid_argument("trajectory prefix must contain at least x_0");
    for (std::size_t s : prefix.states)
        if (s >= model.n_states())
            throw std::invalid_argument("trajectory prefix contains a state outside the space");
    if (prefix.states.front() != model.x0)
        throw std::invalid_argument("trajectory prefix must start at the model initial state");
}

double logsumexp(const std::vector<double>& terms) {
    double m = -kInf;
    for (double t : terms) m = std::max(m, t);
    if (m == -kInf) return -kInf;
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - m);
    return m + std::log(acc);
}

} // namespace

SegmentDensityBundle segment_densities(const ModelSpec& model, const TrajectoryPrefix& prefix) {
    check_prefix(model, prefix);
    const auto& xs = prefix.states;
    const long n = static_cast<long>(prefix.length());
    const PriorParams& pr = model.prior;
    const double rho_bar = 1.0 - pr.rho;

    auto step = [&](const Kernel& k, long i) { return k(xs[i - 1], xs[i]); };

    // Prefix products of f0 steps and suffix products of f2 steps.
    std::vector<double> f0_prefix(n + 1, 1.0);
    for (long i = 1; i <= n; ++i) f0_prefix[i] = f0_prefix[i - 1] * step(model.f0, i);
    std::vector<double> f2_suffix(n + 2, 1.0);
    for (long i = n; i >= 1; --i) f2_suffix[i] = f2_suffix[i + 1] * step(model.f2, i);

    SegmentDensityBundle out;

    // theta1 <= theta2 <= n: direct sum over placements (j, k).
    for (long j = 0; j <= n; ++j) {
        const long a = std::max(j, 1L);
        double mid = 1.0; // product of f1 steps a..k-1
        for (long k = j; k <= n; ++k) {
            const double like = f0_prefix[a - 1] * mid * f2_suffix[std::max(k, 1L)];
            out.both_before_n += prior_joint_pmf(pr, j, k) * like;
            if (k >= a) mid *= step(model.f1, k);
        }
    }

    // theta1 = j <= n < theta2, tail over k > n summed in closed form.
    {
        std::vector<double> f1_suffix(n + 2, 1.0); // product of f1 steps i..n
        for (long i = n; i >= 1; --i) f1_suffix[i] = f1_suffix[i + 1] * step(model.f1, i);
        for (long j = 0; j <= n; ++j) {
            const long a = std::max(j, 1L);
            const double like = f0_prefix[a - 1] * f1_suffix[a];
            out.first_only += prior_theta1_pmf(pr, j) * rho_bar *
                              std::pow(pr.p2, static_cast<double>(n - j)) * like;
        }
    }

    const double p1n = std::pow(pr.p1, static_cast<double>(n));
    out.equal_after_n = (1.0 - pr.pi) * pr.rho * p1n * f0_prefix[n];
    out.both_after_n = (1.0 - pr.pi) * rho_bar * p1n * f0_prefix[n];
    return out;
}

LogSegmentDensityBundle log_segment_densities(const ModelSpec& model,
                                              const TrajectoryPrefix& prefix) {
    check_prefix(model, prefix);
    const auto& xs = prefix.states;
    const long n = static_cast<long>(prefix.length());
    const PriorParams& pr = model.prior;
    const double log_rho_bar = std::log(1.0 - pr.rho);

    auto lstep = [&](const Kernel& k, long i) { return std::log(k(xs[i - 1], xs[i])); };

    std::vector<double> lf0_prefix(n + 1, 0.0);
    for (long i = 1; i <= n; ++i) lf0_prefix[i] = lf0_prefix[i - 1] + lstep(model.f0, i);
    std::vector<double> lf2_suffix(n + 2, 0.0);
    for (long i = n; i >= 1; --i) lf2_suffix[i] = lf2_suffix[i + 1] + lstep(model.f2, i);
    std::vector<double> lf1_suffix(n + 2, 0.0);
    for (long i = n; i >= 1; --i) lf1_suffix[i] = lf1_suffix[i + 1] + lstep(model.f1, i);

    std::vector<double> both_before;
    both_before.reserve(static_cast<std::size_t>((n + 1) * (n + 2) / 2));
    for (long j = 0; j <= n; ++j) {
        const long a = std::max(j, 1L);
        double lmid = 0.0;
        for (long k = j; k <= n; ++k) {
            both_before.push_back(std::log(prior_joint_pmf(pr, j, k)) + lf0_prefix[a - 1] +
                                  lmid + lf2_suffix[std::max(k, 1L)]);
            if (k >= a) lmid += lstep(model.f1, k);
        }
    }

    std::vector<double> first_only;
    first_only.reserve(static_cast<std::size_t>(n + 1));
    for (long j = 0; j <= n; ++j) {
        const long a = std::max(j, 1L);
        first_only.push_back(std::log(prior_theta1_pmf(pr, j)) + log_rho_bar +
                             static_cast<double>(n - j) * std::log(pr.p2) + lf0_prefix[a - 1] +
                             lf1_suffix[a]);
    }

    const double lp1n = static_cast<double>(n) * std::log(pr.p1);
    LogSegmentDensityBundle out{
        logsumexp(both_before),
        logsumexp(first_only),
        std::log(1.0 - pr.pi) + std::log(pr.rho) + lp1n + lf0_prefix[n],
        std::log(1.0 - pr.pi) + log_rho_bar + lp1n + lf0_prefix[n],
    };
    return out;
}

double LogSegmentDensityBundle::log_sum() const {
    return logsumexp({both_before_n, first_only, equal_after_n, both_after_n});
}

double normalizer_S(const ModelSpec& model, const TrajectoryPrefix& prefix) {
    if (prefix.length() == 0) {
        check_prefix(model, prefix);
        return 1.0;
    }
    return segment_densities(model, prefix).sum();
}

double log_normalizer_S(const ModelSpec& model, const TrajectoryPrefix& prefix) {
    if (prefix.length() == 0) {
        check_prefix(model, prefix);
        return 0.0;
    }
    return log_segment_densities(model, prefix).log_sum();
}

double mixture_H(const ModelSpec& model, std::size_t x, std::size_t y, double alpha,
                 double beta, double gamma) {
    constexpr double slack = 1e-9;
    if (x >= model.n_states() || y >= model.n_states())
        throw std::invalid_argument("mixture_H: state index out of range");
    if (beta < -slack || beta > alpha + slack || alpha > 1.0 + slack || gamma < -slack ||
        gamma > 1.0 - alpha + slack)
        throw std::invalid_argument("mixture_H: need 0 <= beta <= alpha <= 1, 0 <= gamma <= 1-alpha");
    alpha = std::clamp(alpha, 0.0, 1.0);
    beta = std::clamp(beta, 0.0, alpha);
    gamma = std::clamp(gamma, 0.0, 1.0 - alpha);

    const PriorParams& pr = model.prior;
    const double w1 = pr.p2 * (alpha - beta) + pr.q1() * (1.0 - alpha - gamma);
    const double w2 = pr.q2() * alpha + pr.p2 * beta + pr.q1() * gamma;
    return (1.0 - alpha) * pr.p1 * model.f0(x, y) + w1 * model.f1(x, y) + w2 * model.f2(x, y);
}

} // namespace disorder
