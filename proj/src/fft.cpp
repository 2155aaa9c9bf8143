#include "kolmo/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

namespace kolmo {
namespace {

struct PlanPair {
    fftw_plan r2c = nullptr;
    fftw_plan c2r = nullptr;
};

class PlanCache {
public:
    ~PlanCache() {
        for (auto& [n, p] : plans_) {
            fftw_destroy_plan(p.r2c);
            fftw_destroy_plan(p.c2r);
        }
    }

    const PlanPair& get(int n) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = plans_.find(n);
        if (it != plans_.end()) return it->second;
        // FFTW_ESTIMATE keeps the chosen algorithm (and thus round-off) fixed run to run.
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        std::vector<double> real(static_cast<std::size_t>(n) * n);
        std::vector<Complex> spec(static_cast<std::size_t>(n) * (n / 2 + 1));
        auto* c = reinterpret_cast<fftw_complex*>(spec.data());
        PlanPair p;
        p.r2c = fftw_plan_dft_r2c_2d(n, n, real.data(), c, flags);
        p.c2r = fftw_plan_dft_c2r_2d(n, n, c, real.data(), flags | FFTW_DESTROY_INPUT);
        return plans_.emplace(n, p).first->second;
    }

private:
    std::mutex mutex_;
    std::map<int, PlanPair> plans_;
};

PlanCache& cache() {
    static PlanCache c;
    return c;
}

}  // namespace

void forward_fft(const Grid& grid, const double* in, Complex* out) {
    const auto& p = cache().get(grid.n());
    fftw_execute_dft_r2c(p.r2c, const_cast<double*>(in), reinterpret_cast<fftw_complex*>(out));
}

void inverse_fft(const Grid& grid, const Complex* in, double* out) {
    const auto& p = cache().get(grid.n());
    thread_local std::vector<Complex> scratch;
    scratch.assign(in, in + grid.spectral_size());
    fftw_execute_dft_c2r(p.c2r, reinterpret_cast<fftw_complex*>(scratch.data()), out);
    const double scale = 1.0 / static_cast<double>(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) out[i] *= scale;
}

SpectralField to_spectral(const RealField& f) {
    SpectralField s(f.grid);
    forward_fft(f.grid, f.values.data(), s.coeffs.data());
    return s;
}

RealField to_physical(const SpectralField& f) {
    RealField r(f.grid);
    inverse_fft(f.grid, f.coeffs.data(), r.values.data());
    return r;
}

}  // namespace kolmo
