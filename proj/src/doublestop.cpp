#include "disorder/doublestop.hpp"

#include "disorder/errors.hpp"
#include "disorder/io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace disorder {

namespace {

// Density ratio with 0/0 := 0; such cells carry no probability mass under a
// validated model, so their table entries are never exercised.
double safe_ratio(double num, double den, const ModelSpec& model, std::size_t t, std::size_t u,
                  const char* what) {
    if (den > 0.0) return num / den;
    if (num > 0.0) {
        std::ostringstream os;
        os << what << " ratio unbounded at (" << model.space.points[t] << " -> "
           << model.space.points[u] << ")";
        throw DivergentRatioError(os.str());
    }
    return 0.0;
}

std::vector<double> ratio21_table(const ModelSpec& model) {
    const std::size_t n = model.n_states();
    std::vector<double> out(n * n);
    for (std::size_t t = 0; t < n; ++t)
        for (std::size_t u = 0; u < n; ++u)
            out[t * n + u] = safe_ratio(model.f2(t, u), model.f1(t, u), model, t, u, "f2/f1");
    return out;
}

std::vector<double> ratio10_table(const ModelSpec& model) {
    const std::size_t n = model.n_states();
    std::vector<double> out(n * n);
    for (std::size_t t = 0; t < n; ++t)
        for (std::size_t u = 0; u < n; ++u)
            out[t * n + u] = safe_ratio(model.f1(t, u), model.f0(t, u), model, t, u, "f1/f0");
    return out;
}

// sum_s table(t, s) f_t(s) mu(s) for each t.
std::vector<double> row_average(const ModelSpec& model, const std::vector<double>& table,
                                const Kernel& f) {
    const std::size_t n = model.n_states();
    std::vector<double> out(n, 0.0);
    for (std::size_t t = 0; t < n; ++t)
        for (std::size_t s = 0; s < n; ++s) out[t] += table[t * n + s] * f(t, s) * model.mu(s);
    return out;
}

const char* variant_name(D00Variant v) {
    return v == D00Variant::Proof ? "proof" : "statement";
}

} // namespace

SecondStopTable iterate_r(const ModelSpec& model, double tol, int max_iter) {
    if (!(tol > 0.0)) throw std::invalid_argument("iterate_r: tol must be positive");
    const std::size_t n = model.n_states();
    SecondStopTable table;
    table.n_states = n;

    const std::vector<double> payoff = ratio21_table(model);
    table.r_star = payoff;

    std::vector<double> next(n * n);
    int k = 0;
    double delta = 0.0;
    while (k < max_iter) {
        ++k;
        const std::vector<double> cont = row_average(model, table.r_star, model.f1);
        delta = 0.0;
        for (std::size_t t = 0; t < n; ++t)
            for (std::size_t u = 0; u < n; ++u) {
                const std::size_t i = t * n + u;
                next[i] = std::max(payoff[i], model.prior.p2 * cont[u]);
                delta = std::max(delta, std::abs(next[i] - table.r_star[i]));
            }
        table.r_star.swap(next);
        if (delta <= tol) break;
    }
    table.iterations = k;
    table.delta = delta;
    table.converged = delta <= tol;

    table.R_bar = row_average(model, table.r_star, model.f1);
    table.R_star.resize(n);
    for (std::size_t t = 0; t < n; ++t) table.R_star[t] = model.prior.p2 * table.R_bar[t];
    table.R_rho.resize(n * n);
    const double rho = model.prior.rho;
    const double q2 = model.prior.q2();
    for (std::size_t t = 0; t < n; ++t)
        for (std::size_t u = 0; u < n; ++u)
            table.R_rho[t * n + u] =
                std::max(rho * payoff[t * n + u], q2 * (1.0 - rho) * table.R_bar[u]);
    return table;
}

FirstStopTable iterate_v(const ModelSpec& model, const SecondStopTable& second, double tol,
                         int max_iter, D00Variant variant) {
    if (!(tol > 0.0)) throw std::invalid_argument("iterate_v: tol must be positive");
    const std::size_t n = model.n_states();
    FirstStopTable table;
    table.n_states = n;
    table.variant = variant;

    const std::vector<double> ratio =
        variant == D00Variant::Proof ? ratio10_table(model) : ratio21_table(model);
    const Kernel& cont_kernel = variant == D00Variant::Proof ? model.f0 : model.f1;

    std::vector<double> payoff(n * n);
    for (std::size_t i = 0; i < n * n; ++i) payoff[i] = ratio[i] * second.R_rho[i];

    table.v_star = payoff;
    std::vector<double> next(n * n);
    int k = 0;
    double delta = 0.0;
    while (k < max_iter) {
        ++k;
        const std::vector<double> cont = row_average(model, table.v_star, cont_kernel);
        delta = 0.0;
        for (std::size_t t = 0; t < n; ++t)
            for (std::size_t u = 0; u < n; ++u) {
                const std::size_t i = t * n + u;
                next[i] = std::max(payoff[i], model.prior.p1 * cont[u]);
                delta = std::max(delta, std::abs(next[i] - table.v_star[i]));
            }
        table.v_star.swap(next);
        if (delta <= tol) break;
    }
    table.iterations = k;
    table.delta = delta;
    table.converged = delta <= tol;

    const std::vector<double> cont = row_average(model, table.v_star, cont_kernel);
    table.stop_set.resize(n * n);
    for (std::size_t t = 0; t < n; ++t)
        for (std::size_t u = 0; u < n; ++u)
            table.stop_set[t * n + u] =
                payoff[t * n + u] >= model.prior.p1 * cont[u] ? 1 : 0;

    // Time-zero treatment. Claiming theta1 = 0 is worth pi*rho when the
    // second claim is lodged immediately and q2*pi*(1-rho)*Rbar(x0) when the
    // second stage runs on; the first stop defers only if the deferred value
    // beats both. Comparing against bare pi instead (the upper bound with a
    // clairvoyant second stage) overstates the stop-now value; the
    // history-tree DP confirms the form below.
    const PriorParams& pr = model.prior;
    const double sigma_wait = pr.q2() * pr.pi * (1.0 - pr.rho) * second.R_bar[model.x0];
    table.eta0_x0 = std::max(pr.pi * pr.rho, sigma_wait);
    table.continuation_x0 = pr.q1() * (1.0 - pr.pi) * cont[model.x0];
    table.value_x0 = std::max(table.eta0_x0, table.continuation_x0);
    table.tau0_immediate = table.eta0_x0 >= table.continuation_x0;
    table.sigma0_immediate = pr.pi * pr.rho >= sigma_wait;
    return table;
}

D00Policy solve_d00(const ModelSpec& model, double tol, int max_iter, D00Variant variant) {
    D00Policy policy;
    policy.second = iterate_r(model, tol, max_iter);
    policy.first = iterate_v(model, policy.second, tol, max_iter, variant);
    policy.model_id = model_fingerprint(model);
    return policy;
}

std::optional<long> second_stop_rule(const ModelSpec& model, const SecondStopTable& table,
                                     const std::vector<PosteriorState>& trace, long m) {
    if (m < 0) throw std::invalid_argument("second_stop_rule: m must be >= 0");
    for (std::size_t i = static_cast<std::size_t>(m) + 1; i < trace.size(); ++i) {
        const PosteriorState& s = trace[i];
        const double ratio = safe_ratio(model.f2(s.x_prev, s.x_curr),
                                        model.f1(s.x_prev, s.x_curr), model, s.x_prev,
                                        s.x_curr, "f2/f1");
        if (ratio >= table.R_star[s.x_curr]) return s.n;
    }
    return std::nullopt;
}

bool coincident_stop(const ModelSpec& model, const SecondStopTable& table, std::size_t t,
                     std::size_t u) {
    const double ratio =
        safe_ratio(model.f2(t, u), model.f1(t, u), model, t, u, "f2/f1");
    const double rho = model.prior.rho;
    return rho * ratio >= model.prior.q2() * (1.0 - rho) * table.R_bar[u];
}

D00Stops apply_d00_policy(const ModelSpec& model, const D00Policy& policy,
                          const std::vector<PosteriorState>& trace) {
    D00Stops stops;
    const std::size_t n = model.n_states();

    if (policy.first.tau0_immediate) {
        stops.tau = 0;
        if (policy.first.sigma0_immediate)
            stops.sigma = 0;
        else
            stops.sigma = second_stop_rule(model, policy.second, trace, 0);
        return stops;
    }

    for (std::size_t i = 1; i < trace.size(); ++i) {
        const PosteriorState& s = trace[i];
        if (policy.first.stop_set[s.x_prev * n + s.x_curr]) {
            stops.tau = s.n;
            if (coincident_stop(model, policy.second, s.x_prev, s.x_curr))
                stops.sigma = s.n;
            else
                stops.sigma = second_stop_rule(model, policy.second, trace, s.n);
            return stops;
        }
    }
    return stops; // first stop never triggered within the horizon
}

nlohmann::ordered_json d00_policy_to_json(const ModelSpec& model, const D00Policy& policy, double tol) {
    nlohmann::ordered_json j;
    j["schema"] = 1;
    j["kind"] = "d00-policy";
    j["model"] = policy.model_id;
    j["variant"] = variant_name(policy.first.variant);
    j["states"] = model.space.points;
    j["r_star"] = policy.second.r_star;
    j["R_star"] = policy.second.R_star;
    j["R_bar"] = policy.second.R_bar;
    j["R_rho"] = policy.second.R_rho;
    j["v_star"] = policy.first.v_star;
    std::string mask;
    mask.reserve(policy.first.stop_set.size());
    for (std::uint8_t b : policy.first.stop_set) mask.push_back(b ? '1' : '0');
    j["stop_set"] = mask;
    j["value"] = policy.first.value_x0;
    j["eta0"] = policy.first.eta0_x0;
    j["continuation"] = policy.first.continuation_x0;
    j["immediate"] = {{"tau0", policy.first.tau0_immediate},
                      {"sigma0", policy.first.sigma0_immediate}};
    j["solver"] = {{"tol", tol},
                   {"second", {{"iterations", policy.second.iterations},
                               {"delta", policy.second.delta},
                               {"converged", policy.second.converged}}},
                   {"first", {{"iterations", policy.first.iterations},
                              {"delta", policy.first.delta},
                              {"converged", policy.first.converged}}}};
    return j;
}

D00Policy d00_policy_from_json(const nlohmann::json& j) {
    if (!j.is_object() || j.value("kind", "") != "d00-policy")
        throw std::invalid_argument("not a d00-policy artifact");
    D00Policy policy;
    const std::size_t n = j.at("states").size();
    policy.second.n_states = n;
    policy.second.r_star = j.at("r_star").get<std::vector<double>>();
    policy.second.R_star = j.at("R_star").get<std::vector<double>>();
    policy.second.R_bar = j.at("R_bar").get<std::vector<double>>();
    policy.second.R_rho = j.at("R_rho").get<std::vector<double>>();
    policy.second.iterations = j.at("solver").at("second").at("iterations").get<int>();
    policy.second.delta = j.at("solver").at("second").at("delta").get<double>();
    policy.second.converged = j.at("solver").at("second").at("converged").get<bool>();
    policy.first.n_states = n;
    policy.first.variant = j.at("variant").get<std::string>() == "statement"
                               ? D00Variant::Statement
                               : D00Variant::Proof;
    policy.first.v_star = j.at("v_star").get<std::vector<double>>();
    const std::string mask = j.at("stop_set").get<std::string>();
    policy.first.stop_set.resize(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) policy.first.stop_set[i] = mask[i] == '1';
    policy.first.value_x0 = j.at("value").get<double>();
    policy.first.eta0_x0 = j.at("eta0").get<double>();
    policy.first.continuation_x0 = j.at("continuation").get<double>();
    policy.first.tau0_immediate = j.at("immediate").at("tau0").get<bool>();
    policy.first.sigma0_immediate = j.at("immediate").at("sigma0").get<bool>();
    policy.first.iterations = j.at("solver").at("first").at("iterations").get<int>();
    policy.first.delta = j.at("solver").at("first").at("delta").get<double>();
    policy.first.converged = j.at("solver").at("first").at("converged").get<bool>();
    policy.model_id = j.at("model").get<std::string>();
    return policy;
}

} // namespace disorder
