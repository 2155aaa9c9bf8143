#include "kolmo/adjoint.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "kolmo/fft.hpp"
#include "kolmo/spectral_ops.hpp"

namespace kolmo {

struct CheckpointAccess {
    static CheckpointStore& reset(CheckpointStore& c, std::size_t total_steps) {
        if (c.policy_ == CheckpointPolicy::Full) {
            c.interval_ = 1;
        } else if (c.requested_interval_ > 0) {
            c.interval_ = c.requested_interval_;
        } else {
            c.interval_ = std::max<std::size_t>(
                1, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(total_steps)))));
        }
        c.schedule_.clear();
        c.states_.clear();
        c.hashes_.clear();
        c.peak_stored_ = 0;
        return c;
    }
    static void save(CheckpointStore& c, std::size_t index, const SpectralField& state) {
        c.schedule_.push_back(index);
        c.states_.push_back(state);
        c.hashes_.push_back(state_hash(state));
    }
    static std::vector<SpectralField>& states(CheckpointStore& c) { return c.states_; }
    static std::vector<std::uint64_t>& hashes(CheckpointStore& c) { return c.hashes_; }
    static void note_stored(CheckpointStore& c, std::size_t count) { c.peak_stored_ = std::max(c.peak_stored_, count); }
};

SpectralField explicit_rhs_vjp(const StepTape::Stage& stage, const SpectralField& cotangent,
                               const SolverParams& params) {
    const Grid& g = cotangent.grid;
    SpectralField out = cotangent;
    out *= -params.drag;
    if (!params.nonlinear) return out;

    // forward: F = -mask(R(u wx + v wy)) - drag w + f
    const auto& t = spectral_tables(g);
    SpectralField pbar = cotangent;
    for (std::size_t p = 0; p < pbar.coeffs.size(); ++p) {
        pbar.coeffs[p] = (params.dealias && !t.keep[p]) ? Complex(0.0) : -pbar.coeffs[p];
    }
    std::vector<double> q(g.size());
    inverse_fft(g, pbar.coeffs.data(), q.data());

    std::vector<double> ub(g.size()), vb(g.size()), wxb(g.size()), wyb(g.size());
    for (std::size_t i = 0; i < q.size(); ++i) {
        ub[i] = q[i] * stage.wx[i];
        wxb[i] = q[i] * stage.u[i];
        vb[i] = q[i] * stage.wy[i];
        wyb[i] = q[i] * stage.v[i];
    }
    SpectralField ubh(g), vbh(g), wxbh(g), wybh(g);
    forward_fft(g, ub.data(), ubh.coeffs.data());
    forward_fft(g, vb.data(), vbh.coeffs.data());
    forward_fft(g, wxb.data(), wxbh.coeffs.data());
    forward_fft(g, wyb.data(), wybh.coeffs.data());
    // Conjugate symbols: conj(i k) = i (-k).
    for (std::size_t p = 0; p < out.coeffs.size(); ++p) {
        if (params.dealias && !t.keep[p]) continue;
        const Complex acc = times_i(-t.dx[p], wxbh.coeffs[p]) + times_i(-t.dy[p], wybh.coeffs[p]) +
                            t.inv_k2[p] * (times_i(-t.dy[p], ubh.coeffs[p]) - times_i(-t.dx[p], vbh.coeffs[p]));
        out.coeffs[p] += acc;
    }
    return out;
}

SpectralField step_vjp(const StepTape& tape, const SpectralField& cotangent_out, const SolverParams& params) {
    const Grid& g = cotangent_out.grid;
    const auto& rk = carpenter_kennedy();
    const double dt = tape.dt;
    const auto& tables = spectral_tables(g);
    SpectralField ubar = cotangent_out;
    SpectralField hbar(g);
    for (int s = RkCoefficients::stages - 1; s >= 0; --s) {
        const double mu = 0.5 * dt * (rk.alpha[s + 1] - rk.alpha[s]);
        const double gdt = rk.gamma[s] * dt;
        for (std::size_t idx = 0; idx < ubar.coeffs.size(); ++idx) {
            const double lam = mu * params.nu * tables.k2[idx];
            const Complex z = ubar.coeffs[idx] / (1.0 + lam);
            ubar.coeffs[idx] = z * (1.0 - lam);
            hbar.coeffs[idx] += gdt * z;
        }
        ubar += explicit_rhs_vjp(tape.stages[static_cast<std::size_t>(s)], hbar, params);
        hbar *= rk.beta[s];
    }
    return ubar;
}

SpectralField step_vjp(const SpectralField& state_in, const SpectralField& cotangent_out,
                       const SolverParams& params, std::optional<double> dt) {
    StepTape tape;
    step(state_in, params, dt, &tape);
    return step_vjp(tape, cotangent_out, params);
}

std::uint64_t state_hash(const SpectralField& f) {
    std::uint64_t h = 1469598103934665603ULL;
    const auto* bytes = reinterpret_cast<const unsigned char*>(f.coeffs.data());
    const std::size_t len = f.coeffs.size() * sizeof(Complex);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= bytes[i];
        h *= 1099511628211ULL;
    }
    return h;
}

double trajectory_cost(const SpectralField& omega0, const TrajectoryCost& cost, const SolverParams& params) {
    double total = 0.0;
    std::size_t next = 0;
    SpectralField state = omega0;
    auto add_terms = [&](std::size_t index) {
        while (next < cost.term_states.size() && cost.term_states[next] == index) {
            total += cost.term(next, state, nullptr);
            ++next;
        }
    };
    add_terms(0);
    for (std::size_t s = 0; s < cost.steps.size(); ++s) {
        state = step(state, params, cost.steps[s]);
        add_terms(s + 1);
    }
    return total;
}

CostGradient gradient(const SpectralField& omega0, const TrajectoryCost& cost, const SolverParams& params,
                      CheckpointStore& checkpoints) {
    const std::size_t K = cost.steps.size();
    CheckpointAccess::reset(checkpoints, K);
    const std::size_t m = checkpoints.interval();

    // Forward sweep.
    CostGradient result{0.0, SpectralField(omega0.grid)};
    std::size_t next = 0;
    SpectralField state = omega0;
    auto add_terms = [&](std::size_t index) {
        while (next < cost.term_states.size() && cost.term_states[next] == index) {
            result.cost += cost.term(next, state, nullptr);
            ++next;
        }
    };
    CheckpointAccess::save(checkpoints, 0, state);
    add_terms(0);
    for (std::size_t s = 0; s < K; ++s) {
        state = step(state, params, cost.steps[s]);
        add_terms(s + 1);
        if ((s + 1) % m == 0 || s + 1 == K) CheckpointAccess::save(checkpoints, s + 1, state);
    }
    CheckpointAccess::note_stored(checkpoints, checkpoints.schedule().size());
    if (next != cost.term_states.size()) throw std::invalid_argument("misfit term beyond trajectory end");

    // Reverse sweep, segment by segment.
    auto& saved = CheckpointAccess::states(checkpoints);
    auto& hashes = CheckpointAccess::hashes(checkpoints);
    const auto& sched = checkpoints.schedule();
    SpectralField lambda(omega0.grid);
    std::ptrdiff_t term = static_cast<std::ptrdiff_t>(cost.term_states.size()) - 1;
    auto add_term_gradients = [&](std::size_t index, const SpectralField& at) {
        while (term >= 0 && cost.term_states[static_cast<std::size_t>(term)] == index) {
            SpectralField g(omega0.grid);
            cost.term(static_cast<std::size_t>(term), at, &g);
            lambda += g;
            --term;
        }
    };
    add_term_gradients(K, saved.back());

    std::vector<StepTape> tapes;
    for (std::size_t c = sched.size() - 1; c-- > 0;) {
        const std::size_t begin = sched[c];
        const std::size_t end = sched[c + 1];
        tapes.assign(end - begin, StepTape{});
        SpectralField replay = saved[c];
        for (std::size_t s = begin; s < end; ++s) {
            replay = step(replay, params, cost.steps[s], &tapes[s - begin]);
        }
        if (state_hash(replay) != hashes[c + 1]) {
            throw std::logic_error("checkpoint replay mismatch at state " + std::to_string(end));
        }
        CheckpointAccess::note_stored(checkpoints, sched.size() + (end - begin));
        for (std::size_t s = end; s-- > begin;) {
            lambda = step_vjp(tapes[s - begin], lambda, params);
            add_term_gradients(s, tapes[s - begin].stages.front().omega);
        }
    }
    result.gradient = std::move(lambda);
    return result;
}

}  // namespace kolmo
