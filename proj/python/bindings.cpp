#include "disorder/detect.hpp"
#include "disorder/doublestop.hpp"
#include "disorder/eval.hpp"
#include "disorder/filter.hpp"
#include "disorder/io.hpp"
#include "disorder/model.hpp"
#include "disorder/oracle.hpp"
#include "disorder/rng.hpp"
#include "disorder/segment.hpp"
#include "disorder/simulate.hpp"

#include <nlohmann/json.hpp>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace disorder;

namespace {

ModelSpec model_from_string(const std::string& config) {
    return model_from_json(nlohmann::json::parse(config));
}

std::vector<std::size_t> to_indices(const ModelSpec& model,
                                    const std::vector<std::string>& ids) {
    std::vector<std::size_t> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
        bool found = false;
        for (std::size_t i = 0; i < model.n_states(); ++i)
            if (model.space.points[i] == id) {
                out.push_back(i);
                found = true;
                break;
            }
        if (!found) throw py::value_error("unknown state identifier '" + id + "'");
    }
    return out;
}

} // namespace

PYBIND11_MODULE(disorder_detect, m) {
    m.doc() = "Bayesian detection of two switch moments in a Markov chain";

    m.def("load_model", &model_from_string, py::arg("config_json"),
          "Parse a model config JSON string.");
    m.def("load_model_file", &load_model_file, py::arg("path"));
    m.def(
        "validate",
        [](const ModelSpec& model) { return validate(model).issues; },
        py::arg("model"), "List of violated invariants; empty when the model is valid.");
    m.def("model_fingerprint", &model_fingerprint, py::arg("model"));
    m.def(
        "model_to_json",
        [](const ModelSpec& model) { return model_to_json(model).dump(); },
        py::arg("model"));

    py::class_<ModelSpec>(m, "ModelSpec")
        .def_property_readonly("n_states", &ModelSpec::n_states)
        .def_property_readonly("states",
                               [](const ModelSpec& mo) { return mo.space.points; })
        .def_readonly("x0", &ModelSpec::x0);

    m.def("prior_theta1_pmf", &prior_theta1_pmf, py::arg("prior"), py::arg("j"));
    m.def("prior_joint_pmf", &prior_joint_pmf, py::arg("prior"), py::arg("j"), py::arg("k"));
    m.def("prior_theta2_tail", &prior_theta2_tail, py::arg("prior"), py::arg("n"));
    py::class_<PriorParams>(m, "PriorParams")
        .def(py::init([](double pi, double rho, double p1, double p2) {
                 return PriorParams{pi, rho, p1, p2};
             }),
             py::arg("pi"), py::arg("rho"), py::arg("p1"), py::arg("p2"))
        .def_readonly("pi", &PriorParams::pi)
        .def_readonly("rho", &PriorParams::rho)
        .def_readonly("p1", &PriorParams::p1)
        .def_readonly("p2", &PriorParams::p2);
    m.def(
        "prior_of", [](const ModelSpec& model) { return model.prior; }, py::arg("model"));

    m.def(
        "mixture_density",
        [](const ModelSpec& model, const std::string& x, const std::string& y, double alpha,
           double beta, double gamma) {
            const auto xi = to_indices(model, {x})[0];
            const auto yi = to_indices(model, {y})[0];
            return mixture_H(model, xi, yi, alpha, beta, gamma);
        },
        py::arg("model"), py::arg("x"), py::arg("y"), py::arg("alpha"), py::arg("beta"),
        py::arg("gamma"));

    m.def(
        "run_filter",
        [](const ModelSpec& model, const std::vector<std::string>& observations) {
            const auto trace = run_filter(model, to_indices(model, observations));
            py::list out;
            for (const PosteriorState& s : trace) {
                py::dict d;
                d["n"] = s.n;
                d["x_prev"] = model.space.points[s.x_prev];
                d["x_curr"] = model.space.points[s.x_curr];
                d["pi1"] = s.pi1;
                d["pi2"] = s.pi2;
                d["pi12"] = s.pi12;
                out.append(d);
            }
            return out;
        },
        py::arg("model"), py::arg("observations"),
        "Posterior trace; entry 0 is the boundary state.");

    m.def(
        "simulate",
        [](const ModelSpec& model, long horizon, std::uint64_t seed, std::uint64_t run) {
            auto eng = make_run_engine(seed, run);
            const SimulationRecord rec = simulate(model, horizon, eng);
            py::dict d;
            d["theta1"] = rec.theta1;
            d["theta2"] = rec.theta2;
            std::vector<std::string> obs;
            for (std::size_t s : rec.observations) obs.push_back(model.space.points[s]);
            d["observations"] = obs;
            d["regimes"] = rec.regimes;
            return d;
        },
        py::arg("model"), py::arg("horizon"), py::arg("seed"), py::arg("run") = 0);

    m.def(
        "solve_detect",
        [](const ModelSpec& model, double tol, std::size_t grid_alpha, std::size_t grid_beta,
           const std::string& variant, int max_iter, int threads) {
            const DetectVariant var =
                variant == "printed" ? DetectVariant::Printed : DetectVariant::Proof;
            const DetectPolicy policy = solve_detect(
                model, PosteriorGrid::uniform(grid_alpha, grid_beta), tol, max_iter, var,
                threads);
            return detect_policy_to_json(model, policy, tol).dump();
        },
        py::arg("model"), py::arg("tol") = 1e-9, py::arg("grid_alpha") = 101,
        py::arg("grid_beta") = 101, py::arg("variant") = "proof",
        py::arg("max_iter") = 10000, py::arg("threads") = 1,
        "Solve the stop-between-switches problem; returns the policy artifact JSON.");

    m.def(
        "solve_d00",
        [](const ModelSpec& model, double tol, const std::string& variant, int max_iter) {
            const D00Variant var =
                variant == "statement" ? D00Variant::Statement : D00Variant::Proof;
            return d00_policy_to_json(model, solve_d00(model, tol, max_iter, var), tol)
                .dump();
        },
        py::arg("model"), py::arg("tol") = 1e-11, py::arg("variant") = "proof",
        py::arg("max_iter") = 10000,
        "Solve the exact-hit double stopping problem; returns the policy artifact JSON.");

    m.def(
        "evaluate_policy",
        [](const ModelSpec& model, const std::string& artifact_json, long runs, long horizon,
           std::uint64_t seed, int threads) {
            const nlohmann::json artifact = nlohmann::json::parse(artifact_json);
            const std::string kind = artifact.value("kind", "");
            EvalReport report;
            if (kind == "detect-policy")
                report = evaluate_detect(
                    model, detect_rule_from_policy(detect_policy_from_json(artifact)), runs,
                    horizon, seed, threads);
            else if (kind == "d00-policy")
                report = evaluate_d00(model,
                                      d00_rule_from_policy(d00_policy_from_json(artifact)),
                                      runs, horizon, seed, threads);
            else
                throw py::value_error("unrecognized policy artifact kind '" + kind + "'");
            return report_to_json(report).dump();
        },
        py::arg("model"), py::arg("policy_artifact"), py::arg("runs") = 100000,
        py::arg("horizon") = 128, py::arg("seed") = 0, py::arg("threads") = 1,
        "Monte Carlo success estimate of a solved policy; returns the report JSON.");

    m.def(
        "dp_detect_value",
        [](const ModelSpec& model, long horizon) { return dp_detect(model, horizon).value; },
        py::arg("model"), py::arg("horizon"));
    m.def(
        "dp_double_value",
        [](const ModelSpec& model, long horizon) { return dp_double(model, horizon).value; },
        py::arg("model"), py::arg("horizon"));
    m.def(
        "oracle_verdict",
        [](const ModelSpec& model, long horizon) {
            return verdict_to_json(model, horizon, oracle_verdict(model, horizon)).dump();
        },
        py::arg("model"), py::arg("horizon") = 12,
        "Arbitrate the documented formula variants; returns the verdict JSON.");
}
