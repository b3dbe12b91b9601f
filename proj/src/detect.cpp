#include "disorder/detect.hpp"

#include "disorder/io.hpp"
#include "disorder/threading.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace disorder {

namespace {

void check_grid(const PosteriorGrid& grid) {
    for (const auto* nodes : {&grid.alpha_nodes, &grid.beta_nodes}) {
        if (nodes->size() < 2 || nodes->front() != 0.0 || nodes->back() != 1.0)
            throw std::invalid_argument("posterior grid nodes must run from 0 to 1");
        for (std::size_t i = 1; i < nodes->size(); ++i)
            if (!((*nodes)[i] > (*nodes)[i - 1]))
                throw std::invalid_argument("posterior grid nodes must be strictly increasing");
    }
}

struct CellPos {
    std::size_t i;
    double w;
};

CellPos locate(const std::vector<double>& nodes, double v) {
    if (v <= nodes.front()) return {0, 0.0};
    if (v >= nodes.back()) return {nodes.size() - 2, 1.0};
    auto it = std::upper_bound(nodes.begin(), nodes.end(), v);
    const std::size_t i = static_cast<std::size_t>(it - nodes.begin()) - 1;
    return {i, (v - nodes[i]) / (nodes[i + 1] - nodes[i])};
}

// Filter step in (alpha, beta) coordinates with gamma tied to rho(1-alpha).
// Returns false when the transition carries zero mixture density.
struct StepAB {
    double alpha, beta, H;
};

bool posterior_step(const ModelSpec& m, std::size_t z, std::size_t u, double alpha, double beta,
                    StepAB& out) {
    const PriorParams& pr = m.prior;
    const double gamma = pr.rho * (1.0 - alpha);
    const double w1 = pr.p2 * (alpha - beta) + pr.q1() * (1.0 - alpha - gamma);
    const double w2 = pr.q2() * alpha + pr.p2 * beta + pr.q1() * gamma;
    const double H = (1.0 - alpha) * pr.p1 * m.f0(z, u) + w1 * m.f1(z, u) + w2 * m.f2(z, u);
    if (!(H > 0.0)) return false;
    double a1 = 1.0 - pr.p1 * (1.0 - alpha) * m.f0(z, u) / H;
    a1 = std::clamp(a1, 0.0, 1.0);
    double b1 = std::clamp(w2 * m.f2(z, u) / H, 0.0, a1);
    out = {a1, b1, H};
    return true;
}

// Cell weights in the (alpha, ratio) parameterization shared by all three
// tables.
struct CellWeights {
    std::size_t base00, base10, base01, base11;
    double w00, w10, w01, w11;

    double apply(const std::vector<double>& v) const {
        return w00 * v[base00] + w10 * v[base10] + w01 * v[base01] + w11 * v[base11];
    }
};

CellWeights cell_weights(const RSTable& table, std::size_t z, double alpha, double beta) {
    alpha = std::clamp(alpha, 0.0, 1.0);
    beta = std::clamp(beta, 0.0, alpha);
    const double w = alpha > 0.0 ? std::clamp(beta / alpha, 0.0, 1.0) : 0.0;
    const CellPos ca = locate(table.grid.alpha_nodes, alpha);
    const CellPos cb = locate(table.grid.beta_nodes, w);
    CellWeights out;
    out.base00 = table.index(z, ca.i, cb.i);
    out.base10 = table.index(z, ca.i + 1, cb.i);
    out.base01 = table.index(z, ca.i, cb.i + 1);
    out.base11 = table.index(z, ca.i + 1, cb.i + 1);
    out.w00 = (1.0 - ca.w) * (1.0 - cb.w);
    out.w10 = ca.w * (1.0 - cb.w);
    out.w01 = (1.0 - ca.w) * cb.w;
    out.w11 = ca.w * cb.w;
    return out;
}

// One-step averages of R against f0, S against f1, and the combined value
// against the full mixture, all from the given tables.
struct Averages {
    double ar = 0.0, as = 0.0, q = 0.0;
};

Averages table_averages(const ModelSpec& m, const RSTable& table, std::size_t z, double alpha,
                        double beta) {
    Averages out;
    for (std::size_t u = 0; u < m.n_states(); ++u) {
        StepAB next;
        if (!posterior_step(m, z, u, alpha, beta, next)) continue;
        const CellWeights cw = cell_weights(table, u, next.alpha, next.beta);
        out.ar += cw.apply(table.R) * m.f0(z, u) * m.mu(u);
        out.as += cw.apply(table.S) * m.f1(z, u) * m.mu(u);
        out.q += cw.apply(table.Q) * next.H * m.mu(u);
    }
    return out;
}

double continuation_T(const PriorParams& pr, double alpha, double beta, const Averages& avg) {
    const double gamma = pr.rho * (1.0 - alpha);
    return (1.0 - alpha - gamma) * (pr.p1 * avg.ar + pr.q1() * avg.as) +
           (alpha - beta) * pr.p2 * avg.as;
}

const char* variant_name(DetectVariant v) {
    return v == DetectVariant::Proof ? "proof" : "printed";
}

} // namespace

PosteriorGrid PosteriorGrid::uniform(std::size_t n_alpha, std::size_t n_beta) {
    if (n_alpha < 2 || n_beta < 2)
        throw std::invalid_argument("posterior grid needs at least two nodes per axis");
    PosteriorGrid g;
    g.alpha_nodes.resize(n_alpha);
    g.beta_nodes.resize(n_beta);
    for (std::size_t i = 0; i < n_alpha; ++i)
        g.alpha_nodes[i] = static_cast<double>(i) / static_cast<double>(n_alpha - 1);
    for (std::size_t i = 0; i < n_beta; ++i)
        g.beta_nodes[i] = static_cast<double>(i) / static_cast<double>(n_beta - 1);
    g.alpha_nodes.back() = 1.0;
    g.beta_nodes.back() = 1.0;
    return g;
}

double reward_h(double alpha, double beta) {
    constexpr double slack = 1e-12;
    if (beta < -slack || beta > alpha + slack || alpha > 1.0 + slack)
        throw std::invalid_argument("reward_h: need 0 <= beta <= alpha <= 1");
    return alpha - beta;
}

RsPair rs_interpolate(const RSTable& table, std::size_t z, double alpha, double beta) {
    const CellWeights cw = cell_weights(table, z, alpha, beta);
    return {cw.apply(table.R), cw.apply(table.S)};
}

double q_interpolate(const RSTable& table, std::size_t z, double alpha, double beta) {
    return cell_weights(table, z, alpha, beta).apply(table.Q);
}

double bellman_T(const ModelSpec& model, const RSTable& table, std::size_t /*y*/, std::size_t z,
                 double alpha, double beta) {
    alpha = std::clamp(alpha, 0.0, 1.0);
    beta = std::clamp(beta, 0.0, alpha);
    return continuation_T(model.prior, alpha, beta, table_averages(model, table, z, alpha, beta));
}

double q_continuation(const ModelSpec& model, const RSTable& table, std::size_t z, double alpha,
                      double beta) {
    alpha = std::clamp(alpha, 0.0, 1.0);
    beta = std::clamp(beta, 0.0, alpha);
    return table_averages(model, table, z, alpha, beta).q;
}

RSTable iterate_RS(const ModelSpec& model, const PosteriorGrid& grid, double tol, int max_iter,
                   int threads, const SweepObserver& on_sweep) {
    if (!(tol > 0.0)) throw std::invalid_argument("iterate_RS: tol must be positive");
    check_grid(grid);

    RSTable table;
    table.grid = grid;
    table.n_states = model.n_states();
    table.rho = model.prior.rho;
    const std::size_t na = grid.alpha_nodes.size();
    const std::size_t nb = grid.beta_nodes.size();
    const std::size_t total = table.n_states * na * nb;
    table.R.assign(total, 0.0);
    table.S.assign(total, 1.0);
    table.Q.resize(total);

    std::vector<double> node_alpha(total), node_beta(total);
    std::vector<std::size_t> node_z(total);
    for (std::size_t z = 0; z < table.n_states; ++z)
        for (std::size_t ai = 0; ai < na; ++ai)
            for (std::size_t bj = 0; bj < nb; ++bj) {
                const std::size_t idx = table.index(z, ai, bj);
                node_alpha[idx] = grid.alpha_nodes[ai];
                node_beta[idx] = grid.alpha_nodes[ai] * grid.beta_nodes[bj];
                node_z[idx] = z;
            }
    for (std::size_t i = 0; i < total; ++i)
        table.Q[i] = node_alpha[i] - node_beta[i];

    // The combined value is iterated through its own table (a positive
    // operator, so the sweep values are pointwise nondecreasing); the
    // decomposition tables ride along and feed the stop-set inequality.
    std::vector<double> r_new(total), s_new(total), q_new(total);
    int k = 0;
    double delta = 0.0;
    while (k < max_iter) {
        ++k;
        parallel_for(total, threads, [&](std::size_t i) {
            const double a = node_alpha[i];
            const double b = node_beta[i];
            const Averages avg = table_averages(model, table, node_z[i], a, b);
            const PriorParams& pr = model.prior;
            if (a - b >= avg.q) { // ties stop
                r_new[i] = 0.0;
                s_new[i] = 1.0;
                q_new[i] = a - b;
            } else {
                r_new[i] = pr.p1 * avg.ar + pr.q1() * avg.as;
                s_new[i] = pr.p2 * avg.as;
                q_new[i] = avg.q;
            }
        });
        delta = 0.0;
        for (std::size_t i = 0; i < total; ++i)
            delta = std::max(delta, std::abs(q_new[i] - table.Q[i]));
        table.R.swap(r_new);
        table.S.swap(s_new);
        table.Q.swap(q_new);
        if (on_sweep) on_sweep(k, table.Q);
        if (delta <= tol) break;
    }
    table.iterations = k;
    table.delta = delta;
    table.converged = delta <= tol;
    return table;
}

RsPair detect_rs_exact(const ModelSpec& model, int k, std::size_t z, double alpha, double beta) {
    if (k < 1) throw std::invalid_argument("detect_rs_exact: k must be >= 1");
    if (k == 1) return {0.0, 1.0};
    Averages avg;
    for (std::size_t u = 0; u < model.n_states(); ++u) {
        StepAB next;
        if (!posterior_step(model, z, u, alpha, beta, next)) continue;
        const RsPair child = detect_rs_exact(model, k - 1, u, next.alpha, next.beta);
        avg.ar += child.r * model.f0(z, u) * model.mu(u);
        avg.as += child.s * model.f1(z, u) * model.mu(u);
    }
    const PriorParams& pr = model.prior;
    const double t = continuation_T(pr, alpha, beta, avg);
    if (alpha - beta >= t) return {0.0, 1.0};
    return {pr.p1 * avg.ar + pr.q1() * avg.as, pr.p2 * avg.as};
}

double detect_q_exact(const ModelSpec& model, int k, std::size_t z, double alpha, double beta) {
    if (k < 0) throw std::invalid_argument("detect_q_exact: k must be >= 0");
    const RsPair rs = detect_rs_exact(model, k + 1, z, alpha, beta);
    const double gamma = model.prior.rho * (1.0 - alpha);
    return (1.0 - alpha - gamma) * rs.r + (alpha - beta) * rs.s;
}

namespace {

// Boundary unrolling shared by the exact and table-backed value formulas.
template <typename RsAt>
double v0_from(const ModelSpec& model, DetectVariant variant, const RsAt& rs_at) {
    const PriorParams& pr = model.prior;
    const double alpha0 = pr.pi;
    const double beta0 = pr.pi * pr.rho;
    Averages avg;
    for (std::size_t u = 0; u < model.n_states(); ++u) {
        StepAB next;
        if (!posterior_step(model, model.x0, u, alpha0, beta0, next)) continue;
        const RsPair rs = rs_at(u, next.alpha, next.beta);
        avg.ar += rs.r * model.f0(model.x0, u) * model.mu(u);
        avg.as += rs.s * model.f1(model.x0, u) * model.mu(u);
    }
    const double pi_bar = 1.0 - pr.pi;
    const double rho_bar = 1.0 - pr.rho;
    const double s_weight = variant == DetectVariant::Proof ? pr.pi * rho_bar * pr.p2
                                                            : pi_bar * pr.rho * pr.p2;
    return pi_bar * rho_bar * pr.p1 * avg.ar + (pi_bar * rho_bar * pr.q1() + s_weight) * avg.as;
}

double stop_now_constant(const PriorParams& pr, DetectVariant variant) {
    return variant == DetectVariant::Proof ? pr.pi * (1.0 - pr.rho)
                                           : pr.p2 * (1.0 - pr.pi) * pr.rho;
}

} // namespace

double detect_v0_exact(const ModelSpec& model, int k, DetectVariant variant) {
    if (k < 1) throw std::invalid_argument("detect_v0_exact: k must be >= 1");
    return v0_from(model, variant, [&](std::size_t u, double a, double b) {
        return detect_rs_exact(model, k, u, a, b);
    });
}

bool DetectPolicy::stop(const ModelSpec& model, std::size_t y, std::size_t z, double alpha,
                        double beta) const {
    alpha = std::clamp(alpha, 0.0, 1.0);
    beta = std::clamp(beta, 0.0, alpha);
    return alpha - beta >= bellman_T(model, tables, y, z, alpha, beta);
}

DetectPolicy solve_detect(const ModelSpec& model, const PosteriorGrid& grid, double tol,
                          int max_iter, DetectVariant variant, int threads) {
    DetectPolicy policy;
    policy.tables = iterate_RS(model, grid, tol, max_iter, threads);
    policy.variant = variant;
    policy.v0 = v0_from(model, variant, [&](std::size_t u, double a, double b) {
        return rs_interpolate(policy.tables, u, a, b);
    });
    policy.stop_now_value = stop_now_constant(model.prior, variant);
    policy.value_at_x0 = std::max(policy.stop_now_value, policy.v0);
    policy.immediate_stop_at_zero = policy.stop_now_value >= policy.v0;
    policy.model_id = model_fingerprint(model);
    return policy;
}

nlohmann::ordered_json detect_policy_to_json(const ModelSpec& model, const DetectPolicy& policy,
                                     double tol) {
    const RSTable& t = policy.tables;
    nlohmann::ordered_json j;
    j["schema"] = 1;
    j["kind"] = "detect-policy";
    j["model"] = policy.model_id;
    j["variant"] = variant_name(policy.variant);
    j["states"] = model.space.points;
    j["rho"] = t.rho;
    j["grid"] = {{"alpha", t.grid.alpha_nodes}, {"beta_ratio", t.grid.beta_nodes}};
    j["R"] = t.R;
    j["S"] = t.S;
    j["Q"] = t.Q;

    const std::size_t na = t.grid.alpha_nodes.size();
    const std::size_t nb = t.grid.beta_nodes.size();
    std::string mask;
    mask.reserve(t.n_states * na * nb);
    for (std::size_t z = 0; z < t.n_states; ++z)
        for (std::size_t ai = 0; ai < na; ++ai)
            for (std::size_t bj = 0; bj < nb; ++bj) {
                const double a = t.grid.alpha_nodes[ai];
                const double b = a * t.grid.beta_nodes[bj];
                mask.push_back(policy.stop(model, 0, z, a, b) ? '1' : '0');
            }
    j["stop_set"] = mask;
    j["value"] = policy.value_at_x0;
    j["v0"] = policy.v0;
    j["stop_now_value"] = policy.stop_now_value;
    j["immediate_stop_at_zero"] = policy.immediate_stop_at_zero;
    j["solver"] = {{"iterations", t.iterations},
                   {"delta", t.delta},
                   {"tol", tol},
                   {"converged", t.converged}};
    return j;
}

DetectPolicy detect_policy_from_json(const nlohmann::json& j) {
    if (!j.is_object() || j.value("kind", "") != "detect-policy")
        throw std::invalid_argument("not a detect-policy artifact");
    DetectPolicy policy;
    RSTable& t = policy.tables;
    t.grid.alpha_nodes = j.at("grid").at("alpha").get<std::vector<double>>();
    t.grid.beta_nodes = j.at("grid").at("beta_ratio").get<std::vector<double>>();
    t.n_states = j.at("states").size();
    t.rho = j.at("rho").get<double>();
    t.R = j.at("R").get<std::vector<double>>();
    t.S = j.at("S").get<std::vector<double>>();
    t.Q = j.at("Q").get<std::vector<double>>();
    t.iterations = j.at("solver").at("iterations").get<int>();
    t.delta = j.at("solver").at("delta").get<double>();
    t.converged = j.at("solver").at("converged").get<bool>();
    policy.variant =
        j.at("variant").get<std::string>() == "printed" ? DetectVariant::Printed
                                                        : DetectVariant::Proof;
    policy.v0 = j.at("v0").get<double>();
    policy.stop_now_value = j.at("stop_now_value").get<double>();
    policy.value_at_x0 = j.at("value").get<double>();
    policy.immediate_stop_at_zero = j.at("immediate_stop_at_zero").get<bool>();
    policy.model_id = j.at("model").get<std::string>();
    return policy;
}

} // namespace disorder
