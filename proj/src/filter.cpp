#include "disorder/filter.hpp"

#include "disorder/errors.hpp"
#include "disorder/io.hpp"
#include "disorder/segment.hpp"

#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace disorder {

namespace {

// Floating-point dust this close to a bound is clamped; anything farther out
// means the recursion itself went wrong and must not be papered over.
constexpr double kClampTol = 1e-9;

double clamp_checked(double v, double lo, double hi, const char* what) {
    if (v < lo - kClampTol || v > hi + kClampTol) {
        std::ostringstream os;
        os << what << " = " << v << " escaped [" << lo << ", " << hi << "] beyond tolerance";
        throw std::logic_error(os.str());
    }
    return v < lo ? lo : (v > hi ? hi : v);
}

} // namespace

PosteriorTriple initial_posteriors(const PriorParams& prior) {
    return {prior.pi, prior.pi * prior.rho, (1.0 - prior.pi) * prior.rho};
}

PosteriorState make_initial_state(const ModelSpec& model) {
    const PosteriorTriple t = initial_posteriors(model.prior);
    return {model.x0, model.x0, t.pi1, t.pi2, t.pi12, 0};
}

PosteriorState filter_step(const ModelSpec& model, const PosteriorState& s, std::size_t y) {
    if (y >= model.n_states())
        throw std::invalid_argument("filter_step: observation outside the state space");
    const PriorParams& pr = model.prior;
    const double H = mixture_H(model, s.x_curr, y, s.pi1, s.pi2, s.pi12);
    if (!(H > 0.0)) {
        std::ostringstream os;
        os << "zero-likelihood observation: H(" << model.space.points[s.x_curr] << " -> "
           << model.space.points[y] << ") = 0 at n = " << s.n + 1;
        throw ZeroLikelihoodError(os.str());
    }

    const double f0 = model.f0(s.x_curr, y);
    const double f2 = model.f2(s.x_curr, y);
    PosteriorState next;
    next.x_prev = s.x_curr;
    next.x_curr = y;
    next.n = s.n + 1;
    next.pi1 = clamp_checked(1.0 - pr.p1 * (1.0 - s.pi1) * f0 / H, 0.0, 1.0, "pi1");
    next.pi2 = clamp_checked(
        (pr.q2() * s.pi1 + pr.p2 * s.pi2 + pr.q1() * s.pi12) * f2 / H, 0.0, next.pi1, "pi2");
    next.pi12 = clamp_checked(pr.p1 * s.pi12 * f0 / H, 0.0, 1.0 - next.pi1, "pi12");
    return next;
}

PinmState pinm_start(const ModelSpec& model, const PosteriorState& s) {
    if (s.n < 1) throw std::invalid_argument("pinm_start: requires m >= 1");
    const PriorParams& pr = model.prior;
    if (pr.p1 <= 0.0)
        throw std::invalid_argument("pinm_start: requires p1 > 0");
    const double f0 = model.f0(s.x_prev, s.x_curr);
    if (!(f0 > 0.0)) {
        std::ostringstream os;
        os << "pinm_start: f0(" << model.space.points[s.x_prev] << " -> "
           << model.space.points[s.x_curr] << ") = 0";
        throw ZeroLikelihoodError(os.str());
    }
    const double ratio = model.f1(s.x_prev, s.x_curr) / f0;
    const double v = (1.0 - pr.rho) * (pr.q1() / pr.p1) * ratio * (1.0 - s.pi1);
    return {s.n, clamp_checked(v, 0.0, 1.0, "pi_mm")};
}

PinmState pinm_step(const ModelSpec& model, const PosteriorState& s, const PinmState& p,
                    std::size_t y) {
    const double H = mixture_H(model, s.x_curr, y, s.pi1, s.pi2, s.pi12);
    if (!(H > 0.0)) {
        std::ostringstream os;
        os << "zero-likelihood observation: H(" << model.space.points[s.x_curr] << " -> "
           << model.space.points[y] << ") = 0 at n = " << s.n + 1;
        throw ZeroLikelihoodError(os.str());
    }
    const double v = model.prior.p2 * p.value * model.f1(s.x_curr, y) / H;
    return {p.m, clamp_checked(v, 0.0, 1.0, "pi_mn")};
}

std::vector<PosteriorState> run_filter(const ModelSpec& model,
                                       const std::vector<std::size_t>& observations) {
    std::vector<PosteriorState> trace;
    trace.reserve(observations.size() + 1);
    trace.push_back(make_initial_state(model));
    for (std::size_t i = 0; i < observations.size(); ++i) {
        try {
            trace.push_back(filter_step(model, trace.back(), observations[i]));
        } catch (const ZeroLikelihoodError& e) {
            std::ostringstream os;
            os << e.what() << " (observation index " << i << ")";
            throw ZeroLikelihoodError(os.str());
        }
    }
    return trace;
}

void write_trace_csv(std::ostream& os, const ModelSpec& model,
                     const std::vector<PosteriorState>& trace,
                     const std::vector<long>& tracked_m) {
    os << "n,x_prev,x_curr,pi1,pi2,pi12";
    for (long m : tracked_m) os << ",pi_m" << m;
    os << "\n";

    // Advance one pinm stream per tracked m alongside the main trace.
    std::vector<PinmState> streams(tracked_m.size());
    for (const PosteriorState& s : trace) {
        os << s.n << "," << model.space.points[s.x_prev] << "," << model.space.points[s.x_curr]
           << "," << format_double(s.pi1) << "," << format_double(s.pi2) << ","
           << format_double(s.pi12);
        for (std::size_t t = 0; t < tracked_m.size(); ++t) {
            const long m = tracked_m[t];
            if (s.n < m) {
                os << ",";
                continue;
            }
            if (s.n == m) streams[t] = pinm_start(model, s);
            os << "," << format_double(streams[t].value);
        }
        os << "\n";
        for (std::size_t t = 0; t < tracked_m.size(); ++t) {
            const long m = tracked_m[t];
            if (s.n >= m && s.n + 1 < static_cast<long>(trace.size()))
                streams[t] = pinm_step(model, s, streams[t], trace[s.n + 1].x_curr);
        }
    }
}

} // namespace disorder
