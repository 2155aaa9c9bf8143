#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "kolmo/solver.hpp"

namespace kolmo {

/// Flat key=value text, one entry per line, '#' starts a comment. Duplicate
/// keys and malformed lines raise ConfigError naming the line.
std::map<std::string, std::string> parse_key_values(std::istream& is);
std::map<std::string, std::string> read_key_values(const std::filesystem::path& path);

enum class Method { Interp, Vanilla, Neural, Pinn, Hybrid, Regression };

Method parse_method(const std::string& name);
std::string method_name(Method m);

struct ExperimentConfig {
    int n = 128;
    SolverParams solver{};
    /// 0 selects default_dt for the grid.
    double dt = 0.0;
    Method method = Method::Vanilla;
    /// Lists expand into a sweep (cartesian product).
    std::vector<int> k{16};
    std::vector<double> sigma{0.0};
    std::uint64_t truth_seed = 0;
    std::uint64_t noise_seed = 1;
    std::uint64_t model_seed = 0;
    bool per_time_noise = true;
    double spinup = 10.0;
    double window = 0.5;
    double obs_interval = 0.05;

    std::size_t vanilla_steps = 1000;
    std::size_t neural_steps = 1000;
    std::size_t pinn_steps = 10000;
    std::size_t hybrid_neural_steps = 500;
    double neural_lr = 1e-2;
    double pinn_lr = 1e-3;
    double weight_decay = 1e-4;
    int rank = 128;
    int width = 64;
    int depth = 3;
    int modes = 5;
    int collocation = 128;
    double lambda_div = 5e3;
    /// Negative selects 1 / sigma^2 (5e3 without noise).
    double lambda_data = -1.0;
    std::size_t monitor_every = 1;

    double rollout_horizon = 5.0;
    /// Optional inputs; empty means "generate from the seeds".
    std::string truth_file;
    std::string observations_file;
    std::string estimate_file;
    std::string out = "out";
    int threads = 1;

    /// Every key accepted by from_key_values.
    static const std::vector<std::string>& keys();
    /// Applies entries on top of defaults; unknown keys are rejected.
    static ExperimentConfig from_key_values(const std::map<std::string, std::string>& kv);
    void validate() const;
    /// Solver parameters with dt resolved for the grid.
    SolverParams resolved_solver() const;
    /// Round-trips through from_key_values.
    std::map<std::string, std::string> to_key_values() const;
};

void write_manifest(const std::filesystem::path& path, const std::map<std::string, std::string>& kv);

}  // namespace kolmo
