#include "disorder/oracle.hpp"

#include "disorder/errors.hpp"
#include "disorder/filter.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace disorder {

namespace {

// Path likelihood for switch placement (j, k): step s is drawn by regime 0
// before j, regime 1 in [j, k), regime 2 from k on. j and k beyond the
// prefix clamp naturally.
double likelihood(const ModelSpec& model, const std::vector<std::size_t>& xs, long j, long k) {
    double l = 1.0;
    const long n = static_cast<long>(xs.size()) - 1;
    for (long s = 1; s <= n; ++s) {
        const int regime = s < j ? 0 : (s < k ? 1 : 2);
        l *= model.kernel(regime)(xs[s - 1], xs[s]);
    }
    return l;
}

// Product over f1-regime steps of the {theta1 = m, theta2 > n} path.
double likelihood_first_only(const ModelSpec& model, const std::vector<std::size_t>& xs,
                             long m) {
    return likelihood(model, xs, m, static_cast<long>(xs.size()));
}

struct UnnormalizedMasses {
    double both_before = 0.0;
    double first_only = 0.0;
    double equal_after = 0.0;
    double both_after = 0.0;

    double S() const { return both_before + first_only + equal_after + both_after; }
};

UnnormalizedMasses enumerate_masses(const ModelSpec& model, const TrajectoryPrefix& prefix) {
    const auto& xs = prefix.states;
    const long n = static_cast<long>(prefix.length());
    const PriorParams& pr = model.prior;
    UnnormalizedMasses m;
    for (long k = 0; k <= n; ++k)
        for (long j = 0; j <= k; ++j)
            m.both_before += prior_joint_pmf(pr, j, k) * likelihood(model, xs, j, k);
    for (long j = 0; j <= n; ++j)
        m.first_only += prior_theta1_pmf(pr, j) * (1.0 - pr.rho) *
                        std::pow(pr.p2, static_cast<double>(n - j)) *
                        likelihood_first_only(model, xs, j);
    const double f0_all = likelihood(model, xs, n + 1, n + 2);
    const double p1n = std::pow(pr.p1, static_cast<double>(n));
    m.equal_after = (1.0 - pr.pi) * pr.rho * p1n * f0_all;
    m.both_after = (1.0 - pr.pi) * (1.0 - pr.rho) * p1n * f0_all;
    return m;
}

long checked_tree_size(const ModelSpec& model, long horizon) {
    if (horizon < 0) throw std::invalid_argument("horizon must be >= 0");
    double size = 1.0;
    for (long d = 0; d < horizon; ++d) size *= static_cast<double>(model.n_states());
    if (size > 1e7)
        throw TreeTooLargeError("history tree |E|^N exceeds the 10^7 node guard");
    return static_cast<long>(size);
}

// Raw-density node state of the detect DP: the four switch-placement masses.
struct RawComponents {
    double both_before, first_only, equal_after, both_after;

    double S() const { return both_before + first_only + equal_after + both_after; }
};

RawComponents raw_child(const ModelSpec& model, const RawComponents& c, std::size_t z,
                        std::size_t u) {
    const PriorParams& pr = model.prior;
    return {
        (c.both_before + pr.q2() * c.first_only + pr.q1() * c.equal_after) * model.f2(z, u),
        (pr.p2 * c.first_only + pr.q1() * c.both_after) * model.f1(z, u),
        pr.p1 * c.equal_after * model.f0(z, u),
        pr.p1 * c.both_after * model.f0(z, u),
    };
}

RawComponents raw_root(const PriorParams& pr) {
    return {pr.pi * pr.rho, pr.pi * (1.0 - pr.rho), (1.0 - pr.pi) * pr.rho,
            (1.0 - pr.pi) * (1.0 - pr.rho)};
}

} // namespace

ExactPosteriors bayes_filter_exact(const ModelSpec& model, const TrajectoryPrefix& prefix,
                                   long max_len) {
    const long n = static_cast<long>(prefix.length());
    if (n > max_len)
        throw PrefixTooLongError("bayes_filter_exact: prefix exceeds the enumeration bound");
    if (prefix.states.empty() || prefix.states.front() != model.x0)
        throw std::invalid_argument("prefix must start at the model initial state");
    for (std::size_t s : prefix.states)
        if (s >= model.n_states())
            throw std::invalid_argument("prefix contains a state outside the space");

    const UnnormalizedMasses m = enumerate_masses(model, prefix);
    const double S = m.S();
    ExactPosteriors out;
    out.S = S;
    out.pi1 = (m.both_before + m.first_only) / S;
    out.pi2 = m.both_before / S;
    out.pi12 = m.equal_after / S;
    out.pinm.resize(static_cast<std::size_t>(n) + 1);
    const PriorParams& pr = model.prior;
    for (long mm = 0; mm <= n; ++mm)
        out.pinm[static_cast<std::size_t>(mm)] =
            prior_theta1_pmf(pr, mm) * (1.0 - pr.rho) *
            std::pow(pr.p2, static_cast<double>(n - mm)) *
            likelihood_first_only(model, prefix.states, mm) / S;
    return out;
}

double oracle_event_prob(const ModelSpec& model, const TrajectoryPrefix& prefix,
                         DisorderEvent event) {
    const auto& xs = prefix.states;
    const long n = static_cast<long>(prefix.length());
    const PriorParams& pr = model.prior;
    const UnnormalizedMasses m = enumerate_masses(model, prefix);
    const double S = m.S();
    const double f0_all = likelihood(model, xs, n + 1, n + 2);
    const double p1n = std::pow(pr.p1, static_cast<double>(n));

    auto first_only_at = [&](long q) { // P(theta1 <= q < theta2) * density, q >= n
        double acc = 0.0;
        for (long j = 0; j <= std::min(q, n); ++j)
            acc += prior_theta1_pmf(pr, j) * (1.0 - pr.rho) *
                   std::pow(pr.p2, static_cast<double>(q - j)) *
                   likelihood_first_only(model, xs, j);
        if (q > n) // placements j in (n, q] leave the whole prefix in regime 0
            for (long j = n + 1; j <= q; ++j)
                acc += prior_theta1_pmf(pr, j) * (1.0 - pr.rho) *
                       std::pow(pr.p2, static_cast<double>(q - j)) * f0_all;
        return acc;
    };
    auto second_by = [&](long q) { // P(theta2 <= q) * density, q >= n
        double acc = 0.0;
        for (long k = 0; k <= q; ++k)
            for (long j = 0; j <= k; ++j)
                acc += prior_joint_pmf(pr, j, k) * likelihood(model, xs, j, k);
        return acc;
    };

    switch (event) {
        case DisorderEvent::EqualAfterNext:
            return (1.0 - pr.pi) * pr.rho * p1n * pr.p1 * f0_all / S;
        case DisorderEvent::SeparatedAfterNext:
            return (1.0 - pr.pi) * (1.0 - pr.rho) * p1n * pr.p1 * f0_all / S;
        case DisorderEvent::FirstByNext:
            return (first_only_at(n + 1) + second_by(n + 1)) / S;
        case DisorderEvent::FirstOnlyAtNext:
            return first_only_at(n + 1) / S;
        case DisorderEvent::SecondByNext:
            return second_by(n + 1) / S;
        case DisorderEvent::EqualAfterNow:
            return m.equal_after / S;
        case DisorderEvent::SeparatedAfterNow:
            return m.both_after / S;
        case DisorderEvent::FirstOnlyNow:
            return m.first_only / S;
        case DisorderEvent::AnyAfterNow:
            return (1.0 - pr.pi) * p1n * f0_all / S;
    }
    throw std::logic_error("unreachable");
}

double oracle_pinm(const ModelSpec& model, const TrajectoryPrefix& prefix, long m, long q) {
    const long n = static_cast<long>(prefix.length());
    if (m < 0 || m > n || q < m) throw std::invalid_argument("oracle_pinm: need 0 <= m <= n, q >= m");
    const PriorParams& pr = model.prior;
    const double mass = prior_theta1_pmf(pr, m) * (1.0 - pr.rho) *
                        std::pow(pr.p2, static_cast<double>(q - m)) *
                        likelihood_first_only(model, prefix.states, m);
    return mass / enumerate_masses(model, prefix).S();
}

double oracle_joint_at(const ModelSpec& model, const TrajectoryPrefix& prefix, long m, long k) {
    const long n = static_cast<long>(prefix.length());
    if (m < 0 || m > k || k > n) throw std::invalid_argument("oracle_joint_at: need 0 <= m <= k <= n");
    const double mass =
        prior_joint_pmf(model.prior, m, k) * likelihood(model, prefix.states, m, k);
    return mass / enumerate_masses(model, prefix).S();
}

DpResult dp_detect(const ModelSpec& model, long horizon, DpMode mode, bool record_nodes) {
    checked_tree_size(model, horizon);
    DpResult result;
    result.horizon = horizon;
    std::vector<std::size_t> path;

    if (mode == DpMode::RawDensity) {
        std::function<double(long, std::size_t, const RawComponents&)> walk =
            [&](long depth, std::size_t z, const RawComponents& c) -> double {
            const double S = c.S();
            const double reward = c.first_only / S;
            double value = reward;
            bool stop = true;
            if (depth < horizon) {
                double cont = 0.0;
                for (std::size_t u = 0; u < model.n_states(); ++u) {
                    const RawComponents child = raw_child(model, c, z, u);
                    const double w = child.S() * model.mu(u) / S;
                    if (!(w > 0.0)) continue;
                    path.push_back(u);
                    cont += w * walk(depth + 1, u, child);
                    path.pop_back();
                }
                if (cont > reward) {
                    value = cont;
                    stop = false;
                }
            }
            if (record_nodes) result.nodes[path] = {value, reward, stop};
            return value;
        };
        result.value = walk(0, model.x0, raw_root(model.prior));
        return result;
    }

    std::function<double(long, const PosteriorState&)> walk =
        [&](long depth, const PosteriorState& s) -> double {
        const double reward = s.pi1 - s.pi2;
        double value = reward;
        bool stop = true;
        if (depth < horizon) {
            double cont = 0.0;
            for (std::size_t u = 0; u < model.n_states(); ++u) {
                const double h = mixture_H(model, s.x_curr, u, s.pi1, s.pi2, s.pi12);
                if (!(h > 0.0)) continue;
                path.push_back(u);
                cont += h * model.mu(u) * walk(depth + 1, filter_step(model, s, u));
                path.pop_back();
            }
            if (cont > reward) {
                value = cont;
                stop = false;
            }
        }
        if (record_nodes) result.nodes[path] = {value, reward, stop};
        return value;
    };
    result.value = walk(0, make_initial_state(model));
    return result;
}

namespace {

// Subtree outcome of the compound-stopping DP: the optimal value before the
// first stop and, for each candidate first-stop epoch m, the optimal
// second-stage value with sigma allowed from the current depth on. All
// quantities are unnormalized path masses.
struct DoubleWalkOut {
    double u1 = 0.0;
    std::vector<double> u2; // index m = 0..depth
};

} // namespace

DpResult dp_double(const ModelSpec& model, long horizon, DpMode mode, bool record_nodes) {
    checked_tree_size(model, horizon);
    DpResult result;
    result.horizon = horizon;
    const PriorParams& pr = model.prior;
    std::vector<std::size_t> path;

    if (mode == DpMode::RawDensity) {
        // nm[m]: mass of {theta1 = m, theta2 > depth}; xi[m]: mass of
        // {theta1 = m, theta2 = depth}; f0path: pure regime-0 path density.
        std::function<DoubleWalkOut(long, std::size_t, const std::vector<double>&,
                                    const std::vector<double>&, double)>
            walk = [&](long depth, std::size_t z, const std::vector<double>& nm,
                       const std::vector<double>& xi, double f0path) -> DoubleWalkOut {
            DoubleWalkOut out;
            out.u2 = xi;
            if (depth < horizon) {
                std::vector<double> child_acc(static_cast<std::size_t>(depth) + 2, 0.0);
                double child_u1 = 0.0;
                for (std::size_t u = 0; u < model.n_states(); ++u) {
                    std::vector<double> nm_child(static_cast<std::size_t>(depth) + 2);
                    std::vector<double> xi_child(static_cast<std::size_t>(depth) + 2);
                    for (long m = 0; m <= depth; ++m) {
                        nm_child[m] = nm[m] * pr.p2 * model.f1(z, u);
                        xi_child[m] = nm[m] * pr.q2() * model.f2(z, u);
                    }
                    nm_child[depth + 1] = prior_theta1_pmf(pr, depth + 1) * (1.0 - pr.rho) *
                                          f0path * model.f1(z, u);
                    xi_child[depth + 1] =
                        prior_theta1_pmf(pr, depth + 1) * pr.rho * f0path * model.f2(z, u);
                    path.push_back(u);
                    const DoubleWalkOut child = walk(depth + 1, u, nm_child, xi_child,
                                                     f0path * model.f0(z, u));
                    path.pop_back();
                    const double mu = model.mu(u);
                    child_u1 += mu * child.u1;
                    for (long m = 0; m <= depth + 1; ++m) child_acc[m] += mu * child.u2[m];
                }
                for (long m = 0; m <= depth; ++m) out.u2[m] = std::max(xi[m], child_acc[m]);
                const double stop_now = out.u2[depth];
                out.u1 = std::max(stop_now, child_u1);
                if (record_nodes)
                    result.nodes[path] = {out.u1, stop_now, stop_now >= child_u1};
            } else {
                out.u1 = out.u2[depth];
                if (record_nodes) result.nodes[path] = {out.u1, out.u1, true};
            }
            return out;
        };
        const DoubleWalkOut root =
            walk(0, model.x0, {pr.pi * (1.0 - pr.rho)}, {pr.pi * pr.rho}, 1.0);
        // Normalization is S_0 = 1, so masses are already probabilities.
        result.value = root.u1;
        return result;
    }

    if (!(pr.p1 > 0.0) || !(pr.p2 > 0.0))
        throw std::invalid_argument("dp_double posterior mode requires p1, p2 > 0");

    // Posterior path: everything from the filter recursions; transitions by
    // the one-step mixture density.
    std::function<DoubleWalkOut(long, const PosteriorState&, const std::vector<double>&)> walk =
        [&](long depth, const PosteriorState& s, const std::vector<double>& pinm)
        -> DoubleWalkOut {
        DoubleWalkOut out;
        // xi[m] for m < depth from the tracked pinm streams; xi[depth] from
        // the coincident-switch closed form.
        out.u2.assign(static_cast<std::size_t>(depth) + 1, 0.0);
        const double ratio21 =
            depth >= 1 ? model.f2(s.x_prev, s.x_curr) /
                             std::max(model.f1(s.x_prev, s.x_curr), 1e-300)
                       : 0.0;
        for (long m = 0; m < depth; ++m)
            out.u2[m] = pr.q2() / pr.p2 * pinm[m] * ratio21;
        if (depth == 0)
            out.u2[0] = pr.pi * pr.rho;
        else
            out.u2[depth] = pr.rho * (pr.q1() / pr.p1) * model.f2(s.x_prev, s.x_curr) /
                            std::max(model.f0(s.x_prev, s.x_curr), 1e-300) * (1.0 - s.pi1);

        if (depth < horizon) {
            std::vector<double> child_acc(static_cast<std::size_t>(depth) + 2, 0.0);
            double child_u1 = 0.0;
            for (std::size_t u = 0; u < model.n_states(); ++u) {
                const double h = mixture_H(model, s.x_curr, u, s.pi1, s.pi2, s.pi12);
                if (!(h > 0.0)) continue;
                std::vector<double> pinm_child(static_cast<std::size_t>(depth) + 1);
                for (long m = 0; m < depth; ++m)
                    pinm_child[m] = pr.p2 * pinm[m] * model.f1(s.x_curr, u) / h;
                // the stream for m = depth starts from the boundary form
                const double pi_mm =
                    depth == 0 ? pr.pi * (1.0 - pr.rho)
                               : (1.0 - pr.rho) * (pr.q1() / pr.p1) *
                                     model.f1(s.x_prev, s.x_curr) /
                                     std::max(model.f0(s.x_prev, s.x_curr), 1e-300) *
                                     (1.0 - s.pi1);
                pinm_child[depth] = pr.p2 * pi_mm * model.f1(s.x_curr, u) / h;
                const PosteriorState ns = filter_step(model, s, u);
                const DoubleWalkOut child = walk(depth + 1, ns, pinm_child);
                const double w = h * model.mu(u);
                child_u1 += w * child.u1;
                for (long m = 0; m <= depth; ++m) child_acc[m] += w * child.u2[m];
            }
            for (long m = 0; m <= depth; ++m) out.u2[m] = std::max(out.u2[m], child_acc[m]);
            out.u1 = std::max(out.u2[depth], child_u1);
        } else {
            out.u1 = out.u2[depth];
        }
        return out;
    };
    result.value = walk(0, make_initial_state(model), {}).u1;
    return result;
}

ReducedD00Dp reduced_d00_dp(const ModelSpec& model, long horizon) {
    if (horizon < 1) throw std::invalid_argument("reduced_d00_dp: horizon must be >= 1");
    const std::size_t n = model.n_states();
    const PriorParams& pr = model.prior;

    std::vector<double> ratio21(n * n), ratio10(n * n);
    for (std::size_t t = 0; t < n; ++t)
        for (std::size_t u = 0; u < n; ++u) {
            const double f1 = model.f1(t, u);
            const double f0 = model.f0(t, u);
            ratio21[t * n + u] = f1 > 0.0 ? model.f2(t, u) / f1 : 0.0;
            ratio10[t * n + u] = f0 > 0.0 ? f1 / f0 : 0.0;
        }
    auto row_avg = [&](const std::vector<double>& table, const Kernel& f) {
        std::vector<double> out(n, 0.0);
        for (std::size_t t = 0; t < n; ++t)
            for (std::size_t s = 0; s < n; ++s) out[t] += table[t * n + s] * f(t, s) * model.mu(s);
        return out;
    };

    // j steps remaining before the deadline.
    std::vector<double> r(n * n), v(n * n), r_bar(n);
    for (std::size_t i = 0; i < n * n; ++i) {
        r[i] = ratio21[i];
        v[i] = ratio10[i] * pr.rho * ratio21[i];
    }
    std::vector<double> v_prev = v;
    for (long j = 1; j <= horizon; ++j) {
        r_bar = row_avg(r, model.f1);
        std::vector<double> r_next(n * n), v_next(n * n);
        const std::vector<double> v_cont = row_avg(v, model.f0);
        for (std::size_t t = 0; t < n; ++t)
            for (std::size_t u = 0; u < n; ++u) {
                const std::size_t i = t * n + u;
                r_next[i] = std::max(ratio21[i], pr.p2 * r_bar[u]);
                const double r_rho =
                    std::max(pr.rho * ratio21[i], pr.q2() * (1.0 - pr.rho) * r_bar[u]);
                v_next[i] = std::max(ratio10[i] * r_rho, pr.p1 * v_cont[u]);
            }
        v_prev = v;
        r.swap(r_next);
        v.swap(v_next);
    }

    ReducedD00Dp out;
    out.horizon = horizon;
    out.r = r;          // r with `horizon` steps remaining
    out.R_bar = r_bar;  // averages r^{(horizon-1)}, the last sweep's input
    out.v = v_prev;     // v with horizon-1 steps remaining

    out.eta0 = std::max(pr.pi * pr.rho,
                        pr.q2() * pr.pi * (1.0 - pr.rho) * r_bar[model.x0]);
    double v_cont_x0 = 0.0;
    for (std::size_t s = 0; s < n; ++s)
        v_cont_x0 += v_prev[model.x0 * n + s] * model.f0(model.x0, s) * model.mu(s);
    out.continuation = pr.q1() * (1.0 - pr.pi) * v_cont_x0;
    out.value = std::max(out.eta0, out.continuation);
    return out;
}

namespace {

std::string winner_of(double gap_a, double gap_b, double value_a, double value_b) {
    if (std::abs(value_a - value_b) <= 1e-12) return "tie";
    return gap_a <= gap_b ? "a" : "b";
}

} // namespace

std::vector<VerdictEntry> oracle_verdict(const ModelSpec& model, long horizon) {
    if (horizon < 2) throw std::invalid_argument("oracle_verdict: horizon must be >= 2");
    checked_tree_size(model, horizon);
    const PriorParams& pr = model.prior;
    std::vector<VerdictEntry> entries;

    const double dp_det = dp_detect(model, horizon).value;
    const double v0_proof = detect_v0_exact(model, static_cast<int>(horizon), DetectVariant::Proof);
    const double v0_printed =
        detect_v0_exact(model, static_cast<int>(horizon), DetectVariant::Printed);

    {
        VerdictEntry e;
        e.id = "detect-stop-now-constant";
        e.description = "immediate-stop value compared against deferring";
        e.variant_a = "printed: p2*(1-pi)*rho";
        e.variant_b = "derived: pi*(1-rho)";
        e.value_a = std::max(pr.p2 * (1.0 - pr.pi) * pr.rho, v0_proof);
        e.value_b = std::max(pr.pi * (1.0 - pr.rho), v0_proof);
        e.dp_value = dp_det;
        e.gap_a = std::abs(e.value_a - dp_det);
        e.gap_b = std::abs(e.value_b - dp_det);
        e.winner = winner_of(e.gap_a, e.gap_b, e.value_a, e.value_b);
        entries.push_back(e);
    }
    {
        VerdictEntry e;
        e.id = "detect-v0-weight";
        e.description = "weight of the middle-regime average in the time-zero value";
        e.variant_a = "printed: (1-pi)*rho*p2";
        e.variant_b = "derived: pi*(1-rho)*p2";
        e.value_a = std::max(pr.pi * (1.0 - pr.rho), v0_printed);
        e.value_b = std::max(pr.pi * (1.0 - pr.rho), v0_proof);
        e.dp_value = dp_det;
        e.gap_a = std::abs(e.value_a - dp_det);
        e.gap_b = std::abs(e.value_b - dp_det);
        e.winner = winner_of(e.gap_a, e.gap_b, e.value_a, e.value_b);
        entries.push_back(e);
    }
    {
        const double dp_dbl = dp_double(model, horizon).value;
        const D00Policy stmt = solve_d00(model, 1e-13, 100000, D00Variant::Statement);
        const D00Policy proof = solve_d00(model, 1e-13, 100000, D00Variant::Proof);
        VerdictEntry e;
        e.id = "d00-first-stop-recursion";
        e.description = "first-stop payoff ratio and continuation kernel";
        e.variant_a = "statement: f2/f1 ratio, f1-weighted continuation";
        e.variant_b = "proof: f1/f0 ratio, f0-weighted continuation";
        e.value_a = stmt.first.value_x0;
        e.value_b = proof.first.value_x0;
        e.dp_value = dp_dbl;
        e.gap_a = std::abs(e.value_a - dp_dbl);
        e.gap_b = std::abs(e.value_b - dp_dbl);
        e.winner = winner_of(e.gap_a, e.gap_b, e.value_a, e.value_b);
        entries.push_back(e);
    }
    return entries;
}

nlohmann::ordered_json verdict_to_json(const ModelSpec& model, long horizon,
                               const std::vector<VerdictEntry>& entries) {
    nlohmann::ordered_json j;
    j["schema"] = 1;
    j["kind"] = "verdict";
    j["model"] = model_fingerprint(model);
    j["horizon"] = horizon;
    auto arr = nlohmann::ordered_json::array();
    for (const VerdictEntry& e : entries) {
        nlohmann::ordered_json d;
        d["id"] = e.id;
        d["description"] = e.description;
        d["variant_a"] = e.variant_a;
        d["variant_b"] = e.variant_b;
        d["value_a"] = e.value_a;
        d["value_b"] = e.value_b;
        d["dp_value"] = e.dp_value;
        d["variant_a_gap"] = e.gap_a;
        d["variant_b_gap"] = e.gap_b;
        d["winner"] = e.winner;
        arr.push_back(d);
    }
    j["discrepancies"] = arr;
    return j;
}

} // namespace disorder
