#include "fdm/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <map>
#include <mutex>
#include <stdexcept>

namespace fdm {
namespace {

// One cached plan pair per transform length. FFTW planning is not thread-safe
// and FFTW_ESTIMATE is used deliberately: measured plans can pick different
// algorithms run to run, which perturbs the last bits of the output and would
// break bit-exact reproducibility between invocations.
struct PlanPair {
    fftw_complex* buf = nullptr;
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
};

class PlanCache {
  public:
    static PlanCache& instance() {
        static PlanCache c;
        return c;
    }

    // Executes dir > 0 ? forward : backward transform of `n` points in/out
    // of the cached buffer under the lock.
    void execute(const std::complex<double>* in, std::complex<double>* out,
                 std::size_t n, int dir) {
        std::lock_guard<std::mutex> lk(mu_);
        PlanPair& p = plans_[n];
        if (!p.buf) {
            p.buf = fftw_alloc_complex(n);
            if (!p.buf) throw std::bad_alloc();
            p.fwd = fftw_plan_dft_1d(static_cast<int>(n), p.buf, p.buf,
                                     FFTW_FORWARD, FFTW_ESTIMATE);
            p.bwd = fftw_plan_dft_1d(static_cast<int>(n), p.buf, p.buf,
                                     FFTW_BACKWARD, FFTW_ESTIMATE);
        }
        // std::complex<double> is layout-compatible with fftw_complex.
        std::memcpy(static_cast<void*>(p.buf), static_cast<const void*>(in),
                    n * sizeof(fftw_complex));
        fftw_execute(dir > 0 ? p.fwd : p.bwd);
        std::memcpy(static_cast<void*>(out), static_cast<const void*>(p.buf),
                    n * sizeof(fftw_complex));
    }

  private:
    PlanCache() = default;
    std::mutex mu_;
    std::map<std::size_t, PlanPair> plans_;
};

}  // namespace

std::vector<std::complex<double>> fft_forward(const std::vector<std::complex<double>>& in) {
    if (in.empty()) return {};
    std::vector<std::complex<double>> out(in.size());
    PlanCache::instance().execute(in.data(), out.data(), in.size(), +1);
    return out;
}

std::vector<std::complex<double>> fft_inverse(const std::vector<std::complex<double>>& in) {
    if (in.empty()) return {};
    std::vector<std::complex<double>> out(in.size());
    PlanCache::instance().execute(in.data(), out.data(), in.size(), -1);
    const double inv_n = 1.0 / static_cast<double>(in.size());
    for (auto& v : out) v *= inv_n;
    return out;
}

Spectrum dft(const Trace& x) {
    Spectrum s;
    if (x.samples.empty()) return s;
    std::vector<std::complex<double>> in(x.samples.begin(), x.samples.end());
    s.bins = fft_forward(in);
    s.df = 1.0 / (static_cast<double>(x.samples.size()) * x.dt);
    return s;
}

Trace idft(const Spectrum& s) {
    Trace t;
    if (s.bins.empty()) return t;
    std::vector<std::complex<double>> out = fft_inverse(s.bins);
    t.samples.resize(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) t.samples[i] = out[i].real();
    t.dt = 1.0 / (static_cast<double>(s.bins.size()) * s.df);
    t.t0 = 0.0;
    return t;
}

}  // namespace fdm
