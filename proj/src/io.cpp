#include "disorder/io.hpp"

#include "disorder/errors.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <fstream>
#include <sstream>

namespace disorder {

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

std::string id_string(const nlohmann::json& j) {
    if (j.is_string()) return j.get<std::string>();
    return j.dump();
}

Kernel kernel_from_json(const nlohmann::json& j, const char* name, std::size_t n) {
    if (!j.is_array() || j.size() != n)
        throw ConfigError(std::string("model config: '") + name + "' must be a " +
                          std::to_string(n) + "-row matrix");
    Kernel k;
    k.n = n;
    k.density.reserve(n * n);
    for (const auto& row : j) {
        if (!row.is_array() || row.size() != n)
            throw ConfigError(std::string("model config: '") + name + "' row has wrong length");
        for (const auto& v : row) {
            if (!v.is_number())
                throw ConfigError(std::string("model config: '") + name + "' entries must be numbers");
            k.density.push_back(v.get<double>());
        }
    }
    return k;
}

const nlohmann::json& require(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end())
        throw ConfigError(std::string("model config: missing field '") + key + "'");
    return *it;
}

} // namespace

ModelSpec model_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("model config: top level must be an object");
    ModelSpec m;

    const auto& states = require(j, "states");
    if (!states.is_array() || states.empty())
        throw ConfigError("model config: 'states' must be a nonempty array");
    for (const auto& s : states) m.space.points.push_back(id_string(s));

    const auto& weights = require(j, "weights");
    if (!weights.is_array() || weights.size() != m.space.points.size())
        throw ConfigError("model config: 'weights' must match 'states' in length");
    for (const auto& w : weights) {
        if (!w.is_number()) throw ConfigError("model config: weights must be numbers");
        m.space.weights.push_back(w.get<double>());
    }

    const std::size_t n = m.space.size();
    m.f0 = kernel_from_json(require(j, "f0"), "f0", n);
    m.f1 = kernel_from_json(require(j, "f1"), "f1", n);
    m.f2 = kernel_from_json(require(j, "f2"), "f2", n);

    const auto& prior = require(j, "prior");
    m.prior.pi = require(prior, "pi").get<double>();
    m.prior.rho = require(prior, "rho").get<double>();
    m.prior.p1 = require(prior, "p1").get<double>();
    m.prior.p2 = require(prior, "p2").get<double>();

    const std::string x0 = id_string(require(j, "x0"));
    bool found = false;
    for (std::size_t i = 0; i < n; ++i)
        if (m.space.points[i] == x0) {
            m.x0 = i;
            found = true;
            break;
        }
    if (!found) throw ConfigError("model config: x0 '" + x0 + "' is not a listed state");
    return m;
}

nlohmann::ordered_json model_to_json(const ModelSpec& model) {
    nlohmann::ordered_json j;
    j["states"] = model.space.points;
    j["weights"] = model.space.weights;
    auto kernel_rows = [&](const Kernel& k) {
        std::vector<std::vector<double>> rows;
        for (std::size_t x = 0; x < k.n; ++x)
            rows.emplace_back(k.density.begin() + static_cast<long>(x * k.n),
                              k.density.begin() + static_cast<long>((x + 1) * k.n));
        return rows;
    };
    j["f0"] = kernel_rows(model.f0);
    j["f1"] = kernel_rows(model.f1);
    j["f2"] = kernel_rows(model.f2);
    j["prior"] = {{"pi", model.prior.pi},
                  {"rho", model.prior.rho},
                  {"p1", model.prior.p1},
                  {"p2", model.prior.p2}};
    j["x0"] = model.space.points[model.x0];
    return j;
}

ModelSpec load_model_file(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("failed to parse model file '" + path + "': " + e.what());
    }
    return model_from_json(j);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write file '" + path + "'");
    out << content;
}

} // namespace disorder
