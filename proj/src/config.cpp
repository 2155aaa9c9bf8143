#include "kolmo/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "kolmo/errors.hpp"

namespace kolmo {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
    T value{};
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) throw ConfigError("invalid value for '" + key + "': '" + text + "'");
    return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw ConfigError("invalid boolean for '" + key + "': '" + text + "'");
}

std::string format(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

template <class T>
std::string join(const std::vector<T>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i > 0) s += ',';
        if constexpr (std::is_floating_point_v<T>) s += format(v[i]);
        else s += std::to_string(v[i]);
    }
    return s;
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)>;
using Getter = std::function<std::string(const ExperimentConfig&)>;
struct Field {
    Setter set;
    Getter get;
};

template <class T>
Field number(T ExperimentConfig::*member) {
    return {[member](ExperimentConfig& c, const std::string& k, const std::string& v) { c.*member = parse_number<T>(k, v); },
            [member](const ExperimentConfig& c) {
                if constexpr (std::is_floating_point_v<T>) return format(c.*member);
                else return std::to_string(c.*member);
            }};
}

template <class T>
Field solver_number(T SolverParams::*member) {
    return {[member](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.solver.*member = parse_number<T>(k, v);
            },
            [member](const ExperimentConfig& c) {
                if constexpr (std::is_floating_point_v<T>) return format(c.solver.*member);
                else return std::to_string(c.solver.*member);
            }};
}

Field text(std::string ExperimentConfig::*member) {
    return {[member](ExperimentConfig& c, const std::string&, const std::string& v) { c.*member = v; },
            [member](const ExperimentConfig& c) { return c.*member; }};
}

const std::map<std::string, Field>& fields() {
    static const std::map<std::string, Field> f = [] {
        std::map<std::string, Field> m;
        m["n"] = number(&ExperimentConfig::n);
        m["dt"] = number(&ExperimentConfig::dt);
        m["nu"] = solver_number(&SolverParams::nu);
        m["drag"] = solver_number(&SolverParams::drag);
        m["forcing_amplitude"] = solver_number(&SolverParams::forcing_amplitude);
        m["forcing_wavenumber"] = solver_number(&SolverParams::forcing_wavenumber);
        m["cfl_safety"] = solver_number(&SolverParams::cfl_safety);
        m["v_max"] = solver_number(&SolverParams::v_max);
        m["dealias"] = {[](ExperimentConfig& c, const std::string& k, const std::string& v) { c.solver.dealias = parse_bool(k, v); },
                        [](const ExperimentConfig& c) { return std::string(c.solver.dealias ? "true" : "false"); }};
        m["method"] = {[](ExperimentConfig& c, const std::string&, const std::string& v) { c.method = parse_method(v); },
                       [](const ExperimentConfig& c) { return method_name(c.method); }};
        m["k"] = {[](ExperimentConfig& c, const std::string& key, const std::string& v) {
                      c.k.clear();
                      for (const auto& item : split_list(v)) c.k.push_back(parse_number<int>(key, item));
                  },
                  [](const ExperimentConfig& c) { return join(c.k); }};
        m["sigma"] = {[](ExperimentConfig& c, const std::string& key, const std::string& v) {
                          c.sigma.clear();
                          for (const auto& item : split_list(v)) c.sigma.push_back(parse_number<double>(key, item));
                      },
                      [](const ExperimentConfig& c) { return join(c.sigma); }};
        m["truth_seed"] = number(&ExperimentConfig::truth_seed);
        m["noise_seed"] = number(&ExperimentConfig::noise_seed);
        m["model_seed"] = number(&ExperimentConfig::model_seed);
        m["per_time_noise"] = {[](ExperimentConfig& c, const std::string& k, const std::string& v) { c.per_time_noise = parse_bool(k, v); },
                               [](const ExperimentConfig& c) { return std::string(c.per_time_noise ? "true" : "false"); }};
        m["spinup"] = number(&ExperimentConfig::spinup);
        m["window"] = number(&ExperimentConfig::window);
        m["obs_interval"] = number(&ExperimentConfig::obs_interval);
        m["vanilla_steps"] = number(&ExperimentConfig::vanilla_steps);
        m["neural_steps"] = number(&ExperimentConfig::neural_steps);
        m["pinn_steps"] = number(&ExperimentConfig::pinn_steps);
        m["hybrid_neural_steps"] = number(&ExperimentConfig::hybrid_neural_steps);
        m["neural_lr"] = number(&ExperimentConfig::neural_lr);
        m["pinn_lr"] = number(&ExperimentConfig::pinn_lr);
        m["weight_decay"] = number(&ExperimentConfig::weight_decay);
        m["rank"] = number(&ExperimentConfig::rank);
        m["width"] = number(&ExperimentConfig::width);
        m["depth"] = number(&ExperimentConfig::depth);
        m["modes"] = number(&ExperimentConfig::modes);
        m["collocation"] = number(&ExperimentConfig::collocation);
        m["lambda_div"] = number(&ExperimentConfig::lambda_div);
        m["lambda_data"] = number(&ExperimentConfig::lambda_data);
        m["monitor_every"] = number(&ExperimentConfig::monitor_every);
        m["rollout_horizon"] = number(&ExperimentConfig::rollout_horizon);
        m["truth_file"] = text(&ExperimentConfig::truth_file);
        m["observations_file"] = text(&ExperimentConfig::observations_file);
        m["estimate_file"] = text(&ExperimentConfig::estimate_file);
        m["out"] = text(&ExperimentConfig::out);
        m["threads"] = number(&ExperimentConfig::threads);
        return m;
    }();
    return f;
}

}  // namespace

std::map<std::string, std::string> parse_key_values(std::istream& is) {
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        if (!kv.emplace(key, trim(line.substr(eq + 1))).second) {
            throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        }
    }
    return kv;
}

std::map<std::string, std::string> read_key_values(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path.string());
    return parse_key_values(is);
}

Method parse_method(const std::string& name) {
    static const std::map<std::string, Method> m{{"interp", Method::Interp}, {"vanilla", Method::Vanilla},
                                                 {"neural", Method::Neural}, {"pinn", Method::Pinn},
                                                 {"hybrid", Method::Hybrid}, {"regression", Method::Regression}};
    const auto it = m.find(name);
    if (it == m.end()) throw ConfigError("unknown method '" + name + "'");
    return it->second;
}

std::string method_name(Method m) {
    switch (m) {
        case Method::Interp: return "interp";
        case Method::Vanilla: return "vanilla";
        case Method::Neural: return "neural";
        case Method::Pinn: return "pinn";
        case Method::Hybrid: return "hybrid";
        case Method::Regression: return "regression";
    }
    return "unknown";
}

const std::vector<std::string>& ExperimentConfig::keys() {
    static const std::vector<std::string> k = [] {
        std::vector<std::string> out;
        for (const auto& [name, f] : fields()) out.push_back(name);
        return out;
    }();
    return k;
}

ExperimentConfig ExperimentConfig::from_key_values(const std::map<std::string, std::string>& kv) {
    ExperimentConfig c;
    for (const auto& [key, value] : kv) {
        const auto it = fields().find(key);
        if (it == fields().end()) throw ConfigError("unknown config key '" + key + "'");
        it->second.set(c, key, value);
    }
    return c;
}

std::map<std::string, std::string> ExperimentConfig::to_key_values() const {
    std::map<std::string, std::string> kv;
    for (const auto& [name, f] : fields()) kv[name] = f.get(*this);
    return kv;
}

void ExperimentConfig::validate() const {
    const Grid grid(n);
    if (dt < 0.0) throw ConfigError("dt: must be non-negative");
    resolved_solver().validate(grid);
    if (k.empty()) throw ConfigError("k: at least one value required");
    for (int v : k) {
        if (v < 1 || v > n) throw ConfigError("k: stride must lie in [1, n]");
    }
    if (sigma.empty()) throw ConfigError("sigma: at least one value required");
    for (double s : sigma) {
        if (!(s >= 0.0)) throw ConfigError("sigma: must be non-negative");
    }
    if (!(spinup >= 0.0)) throw ConfigError("spinup: must be non-negative");
    if (!(window > 0.0)) throw ConfigError("window: must be positive");
    if (!(obs_interval > 0.0) || obs_interval > window) throw ConfigError("obs_interval: must lie in (0, window]");
    if (!(neural_lr > 0.0)) throw ConfigError("neural_lr: must be positive");
    if (!(pinn_lr > 0.0)) throw ConfigError("pinn_lr: must be positive");
    if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay: must be non-negative");
    if (rank < 1 || width < 1 || depth < 1 || modes < 1) throw ConfigError("rank/width/depth/modes: must be positive");
    if (collocation < 1) throw ConfigError("collocation: must be positive");
    if (!(lambda_div >= 0.0)) throw ConfigError("lambda_div: must be non-negative");
    if (!(rollout_horizon > 0.0)) throw ConfigError("rollout_horizon: must be positive");
    if (threads < 1) throw ConfigError("threads: must be >= 1");
    if (out.empty()) throw ConfigError("out: must not be empty");
    const bool needs_budget = method != Method::Interp;
    if (needs_budget) {
        const std::size_t budget = method == Method::Vanilla  ? vanilla_steps
                                   : method == Method::Neural ? neural_steps
                                                              : pinn_steps;
        if (budget == 0) throw ConfigError("step budget for method '" + method_name(method) + "' is zero");
        if (method == Method::Hybrid && hybrid_neural_steps == 0) throw ConfigError("hybrid_neural_steps: must be positive");
    }
}

SolverParams ExperimentConfig::resolved_solver() const {
    SolverParams p = solver;
    p.dt = dt > 0.0 ? dt : default_dt(Grid(n), solver, obs_interval);
    return p;
}

void write_manifest(const std::filesystem::path& path, const std::map<std::string, std::string>& kv) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    for (const auto& [k, v] : kv) os << k << '=' << v << '\n';
}

}  // namespace kolmo
