#include "disorder/detect.hpp"
#include "disorder/doublestop.hpp"
#include "disorder/errors.hpp"
#include "disorder/eval.hpp"
#include "disorder/filter.hpp"
#include "disorder/io.hpp"
#include "disorder/model.hpp"
#include "disorder/oracle.hpp"
#include "disorder/rng.hpp"
#include "disorder/segment.hpp"
#include "disorder/simulate.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>

namespace {

using namespace disorder;

constexpr int kExitConfig = 2;
constexpr int kExitInvalidModel = 3;
constexpr int kExitNonConverged = 4;
constexpr int kExitGuard = 5;

struct CommonOpts {
    std::string model_path;
    std::optional<std::uint64_t> seed;
    int threads = 1;
    std::string out_path;
    std::string format = "json";
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_seed = true) {
    cmd->add_option("--model", opts.model_path, "model config JSON")->required();
    if (with_seed) cmd->add_option("--seed", opts.seed, "master seed (printed when omitted)");
    cmd->add_option("--threads", opts.threads, "worker cap")->check(CLI::PositiveNumber);
    cmd->add_option("--out", opts.out_path, "output path");
    cmd->add_option("--format", opts.format, "json|csv")
        ->check(CLI::IsMember({"json", "csv"}));
}

ModelSpec load_validated(const std::string& path) {
    const ModelSpec model = load_model_file(path);
    const ValidationReport report = validate(model);
    if (!report.ok()) {
        std::cerr << "model validation failed:\n";
        for (const auto& issue : report.issues) std::cerr << "  - " << issue << "\n";
        std::exit(kExitInvalidModel);
    }
    return model;
}

std::uint64_t resolve_seed(const CommonOpts& opts) {
    if (opts.seed) return *opts.seed;
    std::random_device rd;
    const std::uint64_t seed =
        (static_cast<std::uint64_t>(rd()) << 32) ^ static_cast<std::uint64_t>(rd());
    std::cout << "seed=" << seed << "\n";
    return seed;
}

std::size_t state_index(const ModelSpec& model, const std::string& id) {
    for (std::size_t i = 0; i < model.n_states(); ++i)
        if (model.space.points[i] == id) return i;
    throw ConfigError("unknown state identifier '" + id + "'");
}

std::vector<std::size_t> parse_observations(const ModelSpec& model, const std::string& list) {
    std::vector<std::size_t> obs;
    std::string token;
    std::istringstream in(list);
    while (std::getline(in, token, ',')) {
        if (!token.empty()) obs.push_back(state_index(model, token));
    }
    if (obs.empty()) throw ConfigError("empty observation list");
    return obs;
}

void emit(const CommonOpts& opts, const std::string& content) {
    if (opts.out_path.empty())
        std::cout << content;
    else
        write_file(opts.out_path, content);
}

int cmd_simulate(const CommonOpts& opts, long runs, long horizon) {
    const ModelSpec model = load_validated(opts.model_path);
    const std::uint64_t seed = resolve_seed(opts);

    std::vector<SimulationRecord> batch;
    batch.reserve(static_cast<std::size_t>(runs));
    for (long r = 0; r < runs; ++r) {
        auto eng = make_run_engine(seed, static_cast<std::uint64_t>(r));
        batch.push_back(simulate(model, horizon, eng));
    }
    std::ostringstream csv;
    write_batch_csv(csv, model, batch);
    write_file(opts.out_path, csv.str());

    std::map<std::pair<long, long>, long> freq;
    for (const auto& rec : batch) ++freq[{rec.theta1, rec.theta2}];
    std::vector<std::pair<std::pair<long, long>, long>> top(freq.begin(), freq.end());
    std::sort(top.begin(), top.end(),
              [](const auto& a, const auto& b) { return a.second > b.second; });
    std::cout << "runs=" << runs << " horizon=" << horizon << "\n";
    for (std::size_t i = 0; i < std::min<std::size_t>(5, top.size()); ++i)
        std::cout << "theta=(" << top[i].first.first << "," << top[i].first.second
                  << ") freq=" << format_double(static_cast<double>(top[i].second) /
                                                static_cast<double>(runs))
                  << "\n";
    return 0;
}

int cmd_filter(const CommonOpts& opts, const std::string& obs_list,
               const std::string& obs_file, const std::vector<long>& track_m) {
    const ModelSpec model = load_validated(opts.model_path);
    std::string raw = obs_list;
    if (!obs_file.empty()) {
        std::string content = read_file(obs_file);
        for (char& c : content)
            if (c == '\n' || c == '\r' || c == ' ' || c == '\t') c = ',';
        raw = content;
    }
    if (raw.empty()) throw ConfigError("filter: provide --obs or --obs-file");
    const std::vector<std::size_t> obs = parse_observations(model, raw);
    const std::vector<PosteriorState> trace = run_filter(model, obs);
    std::ostringstream csv;
    write_trace_csv(csv, model, trace, track_m);
    emit(opts, csv.str());
    return 0;
}

int solve_exit(bool converged, double delta, bool allow_nonconverged) {
    if (converged || allow_nonconverged) return 0;
    std::cerr << "solver did not converge; residual=" << format_double(delta) << "\n";
    return kExitNonConverged;
}

int cmd_solve_detect(const CommonOpts& opts, double tol, int max_iter, std::size_t grid_alpha,
                     std::size_t grid_beta, const std::string& variant,
                     bool allow_nonconverged) {
    const ModelSpec model = load_validated(opts.model_path);
    const DetectVariant var =
        variant == "printed" ? DetectVariant::Printed : DetectVariant::Proof;
    const PosteriorGrid grid = PosteriorGrid::uniform(grid_alpha, grid_beta);
    const DetectPolicy policy = solve_detect(model, grid, tol, max_iter, var, opts.threads);
    emit(opts, detect_policy_to_json(model, policy, tol).dump(2) + "\n");
    std::cout << "value=" << format_double(policy.value_at_x0)
              << " iterations=" << policy.tables.iterations
              << " residual=" << format_double(policy.tables.delta)
              << " converged=" << (policy.tables.converged ? "true" : "false") << "\n";
    return solve_exit(policy.tables.converged, policy.tables.delta, allow_nonconverged);
}

int cmd_solve_d00(const CommonOpts& opts, double tol, int max_iter, const std::string& variant,
                  bool allow_nonconverged) {
    const ModelSpec model = load_validated(opts.model_path);
    const D00Variant var =
        variant == "printed" ? D00Variant::Statement : D00Variant::Proof;
    const D00Policy policy = solve_d00(model, tol, max_iter, var);
    emit(opts, d00_policy_to_json(model, policy, tol).dump(2) + "\n");
    const bool converged = policy.second.converged && policy.first.converged;
    const double delta = std::max(policy.second.delta, policy.first.delta);
    std::cout << "value=" << format_double(policy.first.value_x0)
              << " iterations=" << policy.second.iterations + policy.first.iterations
              << " residual=" << format_double(delta)
              << " converged=" << (converged ? "true" : "false") << "\n";
    return solve_exit(converged, delta, allow_nonconverged);
}

int cmd_evaluate(const CommonOpts& opts, const std::string& policy_path,
                 const std::string& baseline, const std::string& problem, long runs,
                 long horizon) {
    const ModelSpec model = load_validated(opts.model_path);
    const std::uint64_t seed = resolve_seed(opts);

    EvalReport report;
    if (!policy_path.empty()) {
        nlohmann::json artifact;
        try {
            artifact = nlohmann::json::parse(read_file(policy_path));
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("failed to parse policy artifact: ") + e.what());
        }
        const std::string kind = artifact.value("kind", "");
        if (artifact.value("model", "") != model_fingerprint(model))
            std::cerr << "warning: policy artifact was solved for a different model\n";
        if (kind == "detect-policy")
            report = evaluate_detect(model, detect_rule_from_policy(
                                                detect_policy_from_json(artifact)),
                                     runs, horizon, seed, opts.threads);
        else if (kind == "d00-policy")
            report = evaluate_d00(model, d00_rule_from_policy(d00_policy_from_json(artifact)),
                                  runs, horizon, seed, opts.threads);
        else
            throw ConfigError("policy artifact kind '" + kind + "' not recognized");
    } else if (!baseline.empty()) {
        if (problem == "detect") {
            DetectRule rule;
            if (baseline == "never")
                rule = detect_rule_never();
            else if (baseline == "trailing-peak")
                rule = detect_rule_trailing_peak();
            else if (baseline.rfind("fixed-n:", 0) == 0)
                rule = detect_rule_stop_at(std::stol(baseline.substr(8)));
            else if (baseline.rfind("threshold-z:", 0) == 0)
                rule = detect_rule_threshold(std::stod(baseline.substr(12)));
            else
                throw ConfigError("unknown detect baseline '" + baseline + "'");
            report = evaluate_detect(model, rule, runs, horizon, seed, opts.threads);
        } else if (problem == "d00") {
            D00Rule rule;
            if (baseline.rfind("fixed-nm:", 0) == 0) {
                const std::string spec = baseline.substr(9);
                const auto comma = spec.find(',');
                if (comma == std::string::npos)
                    throw ConfigError("fixed-nm baseline needs two epochs");
                rule = d00_rule_fixed(std::stol(spec.substr(0, comma)),
                                      std::stol(spec.substr(comma + 1)));
            } else if (baseline.rfind("threshold-pp:", 0) == 0)
                rule = d00_rule_threshold(std::stod(baseline.substr(13)));
            else
                throw ConfigError("unknown d00 baseline '" + baseline + "'");
            report = evaluate_d00(model, rule, runs, horizon, seed, opts.threads);
        } else {
            throw ConfigError("--problem must be detect or d00 for baselines");
        }
    } else {
        throw ConfigError("evaluate: provide --policy or --baseline");
    }

    if (opts.format == "csv")
        emit(opts, report_csv_header() + "\n" + report_to_csv_row(report) + "\n");
    else
        emit(opts, report_to_json(report).dump(2) + "\n");
    return 0;
}

int cmd_verdict(const CommonOpts& opts, long horizon) {
    const ModelSpec model = load_validated(opts.model_path);
    std::vector<VerdictEntry> entries;
    try {
        entries = oracle_verdict(model, horizon);
    } catch (const TreeTooLargeError& e) {
        std::cerr << e.what() << "\n";
        return kExitGuard;
    }
    emit(opts, verdict_to_json(model, horizon, entries).dump(2) + "\n");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian detection of two switch moments in a Markov chain"};
    app.require_subcommand(1);

    CommonOpts opts;

    auto* sim = app.add_subcommand("simulate", "draw switch moments and trajectories");
    long runs = 100, horizon = 64;
    add_common(sim, opts);
    sim->add_option("--runs", runs)->check(CLI::PositiveNumber);
    sim->add_option("--horizon", horizon)->check(CLI::PositiveNumber);
    sim->get_option("--out")->required();

    auto* fil = app.add_subcommand("filter", "run the posterior recursion on observations");
    std::string obs_list, obs_file;
    std::vector<long> track_m;
    add_common(fil, opts, false);
    fil->add_option("--obs", obs_list, "comma-separated observations after x0");
    fil->add_option("--obs-file", obs_file, "file of observations");
    fil->add_option("--track-m", track_m, "track pi_mn for these m")->delimiter(',');

    auto* sdet = app.add_subcommand("solve-detect", "solve the stop-between-switches problem");
    double tol = 1e-9;
    int max_iter = 10000;
    std::size_t grid_alpha = 101, grid_beta = 101;
    std::string variant = "proof";
    bool allow_nonconverged = false;
    add_common(sdet, opts, false);
    sdet->add_option("--tol", tol)->check(CLI::PositiveNumber);
    sdet->add_option("--max-iter", max_iter)->check(CLI::PositiveNumber);
    sdet->add_option("--grid-alpha", grid_alpha)->check(CLI::PositiveNumber);
    sdet->add_option("--grid-beta", grid_beta)->check(CLI::PositiveNumber);
    sdet->add_option("--variant", variant)->check(CLI::IsMember({"proof", "printed"}));
    sdet->add_flag("--allow-nonconverged", allow_nonconverged);
    sdet->get_option("--out")->required();

    auto* sd00 = app.add_subcommand("solve-d00", "solve the exact-hit double stopping problem");
    add_common(sd00, opts, false);
    sd00->add_option("--tol", tol)->check(CLI::PositiveNumber);
    sd00->add_option("--max-iter", max_iter)->check(CLI::PositiveNumber);
    sd00->add_option("--variant", variant)->check(CLI::IsMember({"proof", "printed"}));
    sd00->add_flag("--allow-nonconverged", allow_nonconverged);
    sd00->get_option("--out")->required();

    auto* ev = app.add_subcommand("evaluate", "Monte Carlo success probability of a policy");
    std::string policy_path, baseline, problem;
    long ev_runs = 100000, ev_horizon = 128;
    add_common(ev, opts);
    ev->add_option("--policy", policy_path, "policy artifact JSON");
    ev->add_option("--baseline", baseline, "baseline policy name");
    ev->add_option("--problem", problem, "detect|d00 (baselines only)")
        ->check(CLI::IsMember({"detect", "d00"}));
    ev->add_option("--runs", ev_runs)->check(CLI::PositiveNumber);
    ev->add_option("--horizon", ev_horizon)->check(CLI::PositiveNumber);

    auto* ver = app.add_subcommand("oracle-verdict", "arbitrate documented formula variants");
    long ver_horizon = 12;
    add_common(ver, opts, false);
    ver->add_option("--horizon", ver_horizon)->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (sim->parsed()) return cmd_simulate(opts, runs, horizon);
        if (fil->parsed()) return cmd_filter(opts, obs_list, obs_file, track_m);
        if (sdet->parsed())
            return cmd_solve_detect(opts, tol, max_iter, grid_alpha, grid_beta, variant,
                                    allow_nonconverged);
        if (sd00->parsed()) return cmd_solve_d00(opts, tol, max_iter, variant, allow_nonconverged);
        if (ev->parsed())
            return cmd_evaluate(opts, policy_path, baseline, problem, ev_runs, ev_horizon);
        if (ver->parsed()) return cmd_verdict(opts, ver_horizon);
    } catch (const TreeTooLargeError& e) {
        std::cerr << e.what() << "\n";
        return kExitGuard;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    }
    return 0;
}
