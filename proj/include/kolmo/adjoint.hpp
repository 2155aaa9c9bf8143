#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "kolmo/solver.hpp"

namespace kolmo {

/// Transposed Jacobian of explicit_rhs at the state recorded in `stage`,
/// applied to a spectral cotangent.
SpectralField explicit_rhs_vjp(const StepTape::Stage& stage, const SpectralField& cotangent,
                               const SolverParams& params);

/// J^T applied to `cotangent_out` for one step taken from `state_in`.
/// Cotangents live in the spectral representation paired by spectral_dot,
/// i.e. they are the transforms of physical-space gradients.
SpectralField step_vjp(const SpectralField& state_in, const SpectralField& cotangent_out,
                       const SolverParams& params, std::optional<double> dt = std::nullopt);
SpectralField step_vjp(const StepTape& tape, const SpectralField& cotangent_out, const SolverParams& params);

enum class CheckpointPolicy { Uniform, Full };

/// Forward states kept for the reverse sweep. Uniform keeps every
/// `interval`-th state (default ceil(sqrt(K))) and replays segments; Full
/// keeps every state.
class CheckpointStore {
public:
    explicit CheckpointStore(CheckpointPolicy policy = CheckpointPolicy::Uniform, std::size_t interval = 0)
        : policy_(policy), requested_interval_(interval) {}

    CheckpointPolicy policy() const { return policy_; }
    std::size_t interval() const { return interval_; }
    const std::vector<std::size_t>& schedule() const { return schedule_; }
    /// Largest number of states held at once during the last gradient call.
    std::size_t peak_stored() const { return peak_stored_; }

private:
    friend struct CheckpointAccess;
    CheckpointPolicy policy_;
    std::size_t requested_interval_;
    std::size_t interval_ = 1;
    std::vector<std::size_t> schedule_;
    std::vector<SpectralField> states_;
    std::vector<std::uint64_t> hashes_;
    std::size_t peak_stored_ = 0;
};

/// Sum of misfit terms evaluated at selected states of a fixed step sequence.
struct TrajectoryCost {
    std::vector<double> steps;
    /// State indices (0 = initial) carrying a misfit term, strictly increasing.
    std::vector<std::size_t> term_states;
    /// Value of term `t` at `state`; when `cotangent` is non-null it receives
    /// the spectral gradient of that term.
    std::function<double(std::size_t t, const SpectralField& state, SpectralField* cotangent)> term;
};

struct CostGradient {
    double cost = 0.0;
    SpectralField gradient;
};

double trajectory_cost(const SpectralField& omega0, const TrajectoryCost& cost, const SolverParams& params);

/// Cost and its exact discrete gradient with respect to omega0. Throws
/// std::logic_error when a replayed segment does not reproduce its checkpoint.
CostGradient gradient(const SpectralField& omega0, const TrajectoryCost& cost, const SolverParams& params,
                      CheckpointStore& checkpoints);

std::uint64_t state_hash(const SpectralField& f);

}  // namespace kolmo
