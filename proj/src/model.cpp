#include "disorder/model.hpp"

#include <cmath>
#include <cstdint>
#include <set>
#include <sstream>
#include <stdexcept>

namespace disorder {

namespace {

constexpr double kRowSumTol = 1e-12;

void check_kernel(const ModelSpec& model, const Kernel& k, const char* name,
                  std::vector<std::string>& issues) {
    const std::size_t n = model.n_states();
    if (k.n != n || k.density.size() != n * n) {
        std::ostringstream os;
        os << name << ": dimensions do not match the state space (" << n << " states)";
        issues.push_back(os.str());
        return;
    }
    for (std::size_t x = 0; x < n; ++x) {
        double row = 0.0;
        for (std::size_t y = 0; y < n; ++y) {
            const double v = k(x, y);
            if (v < 0.0 || !std::isfinite(v)) {
                std::ostringstream os;
                os << name << " row " << x << " ('" << model.space.points[x]
                   << "'): negative or non-finite density at column " << y;
                issues.push_back(os.str());
            }
            row += v * model.mu(y);
        }
        if (std::abs(row - 1.0) > kRowSumTol) {
            std::ostringstream os;
            os << name << " row " << x << " ('" << model.space.points[x]
               << "'): density integrates to " << row << " (deficit " << 1.0 - row << ")";
            issues.push_back(os.str());
        }
    }
}

} // namespace

ValidationReport validate(const ModelSpec& model) {
    ValidationReport report;
    auto& issues = report.issues;
    const std::size_t n = model.n_states();

    if (n == 0) {
        issues.push_back("state space is empty");
        return report;
    }
    if (model.space.weights.size() != n)
        issues.push_back("weights length does not match the number of states");
    else {
        for (std::size_t i = 0; i < n; ++i)
            if (!(model.space.weights[i] > 0.0) || !std::isfinite(model.space.weights[i])) {
                std::ostringstream os;
                os << "weight of state " << i << " ('" << model.space.points[i]
                   << "') must be positive and finite";
                issues.push_back(os.str());
            }
    }
    {
        std::set<std::string> seen;
        for (const auto& p : model.space.points)
            if (!seen.insert(p).second)
                issues.push_back("duplicate state identifier '" + p + "'");
    }
    if (model.x0 >= n)
        issues.push_back("initial state index out of range");

    check_kernel(model, model.f0, "f0", issues);
    check_kernel(model, model.f1, "f1", issues);
    check_kernel(model, model.f2, "f2", issues);

    // Density ratios must stay finite, so a cell may vanish only in all
    // three kernels at once.
    if (model.f0.n == n && model.f1.n == n && model.f2.n == n) {
        for (std::size_t x = 0; x < n; ++x)
            for (std::size_t y = 0; y < n; ++y) {
                const bool z0 = model.f0(x, y) == 0.0;
                const bool z1 = model.f1(x, y) == 0.0;
                const bool z2 = model.f2(x, y) == 0.0;
                if ((z0 || z1 || z2) && !(z0 && z1 && z2)) {
                    std::ostringstream os;
                    os << "cell (" << model.space.points[x] << " -> " << model.space.points[y]
                       << ") vanishes in some kernels but not all; density ratios unbounded";
                    issues.push_back(os.str());
                }
            }
    }

    const PriorParams& pr = model.prior;
    auto in01 = [](double v) { return v >= 0.0 && v <= 1.0 && std::isfinite(v); };
    if (!in01(pr.pi)) issues.push_back("prior pi must lie in [0,1]");
    if (!in01(pr.rho)) issues.push_back("prior rho must lie in [0,1]");
    if (!in01(pr.p1)) issues.push_back("prior p1 must lie in [0,1]");
    if (!in01(pr.p2)) issues.push_back("prior p2 must lie in [0,1]");
    if (pr.p1 >= 1.0)
        issues.push_back("p1 = 1: theta1 is infinite with positive probability");
    if (pr.p2 >= 1.0)
        issues.push_back("p2 = 1: theta2 is infinite with positive probability");

    return report;
}

double prior_theta1_pmf(const PriorParams& prior, long j) {
    if (j < 0) throw std::invalid_argument("prior_theta1_pmf: j must be >= 0");
    if (j == 0) return prior.pi;
    return (1.0 - prior.pi) * std::pow(prior.p1, static_cast<double>(j - 1)) * prior.q1();
}

double prior_joint_pmf(const PriorParams& prior, long j, long k) {
    if (j < 0 || k < j) throw std::invalid_argument("prior_joint_pmf: need 0 <= j <= k");
    const double pj = prior_theta1_pmf(prior, j);
    if (k == j) return pj * prior.rho;
    return pj * (1.0 - prior.rho) * std::pow(prior.p2, static_cast<double>(k - j - 1)) *
           prior.q2();
}

double prior_theta1_tail(const PriorParams& prior, long j) {
    if (j < 0) return 1.0;
    return (1.0 - prior.pi) * std::pow(prior.p1, static_cast<double>(j));
}

double prior_theta2_tail(const PriorParams& prior, long n) {
    if (n < 0) return 1.0;
    // Either theta1 already exceeds n, or theta1 = j <= n and the second
    // switch survives the remaining n - j steps.
    double tail = prior_theta1_tail(prior, n);
    for (long j = 0; j <= n; ++j)
        tail += prior_theta1_pmf(prior, j) * (1.0 - prior.rho) *
                std::pow(prior.p2, static_cast<double>(n - j));
    return tail;
}

std::string model_fingerprint(const ModelSpec& model) {
    // FNV-1a over the exact bit patterns of everything that defines the model.
    std::uint64_t h = 1469598103934665603ULL;
    auto mix_bytes = [&h](const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= p[i];
            h *= 1099511628211ULL;
        }
    };
    auto mix_double = [&](double v) { mix_bytes(&v, sizeof v); };

    for (const auto& s : model.space.points) mix_bytes(s.data(), s.size());
    for (double w : model.space.weights) mix_double(w);
    for (const Kernel* k : {&model.f0, &model.f1, &model.f2})
        for (double v : k->density) mix_double(v);
    mix_double(model.prior.pi);
    mix_double(model.prior.rho);
    mix_double(model.prior.p1);
    mix_double(model.prior.p2);
    mix_bytes(&model.x0, sizeof model.x0);

    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

} // namespace disorder
