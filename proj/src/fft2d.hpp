#pragma once

#include <complex>
#include <mutex>

#include <fftw3.h>

#include "camsim/common.hpp"

namespace camsim::detail {

// FFTW's planner is not thread-safe; plan creation/destruction is
// serialized here. Plans use FFTW_ESTIMATE so the chosen algorithm (and
// therefore the output bits) do not depend on runtime timing.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

// Real-to-complex 2-D transform pair with owned, aligned buffers.
class Fft2D {
public:
    Fft2D(int height, int width) : h_(height), w_(width), wc_(width / 2 + 1) {
        real_ = fftw_alloc_real(size_t(h_) * w_);
        freq_ = fftw_alloc_complex(size_t(h_) * wc_);
        if (!real_ || !freq_) throw std::bad_alloc();
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        fwd_ = fftw_plan_dft_r2c_2d(h_, w_, real_, freq_, FFTW_ESTIMATE);
        inv_ = fftw_plan_dft_c2r_2d(h_, w_, freq_, real_, FFTW_ESTIMATE);
        if (!fwd_ || !inv_) throw error("fftw plan creation failed");
    }
    ~Fft2D() {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(inv_);
        fftw_free(real_);
        fftw_free(freq_);
    }
    Fft2D(const Fft2D&) = delete;
    Fft2D& operator=(const Fft2D&) = delete;

    int height() const { return h_; }
    int width() const { return w_; }
    int freq_width() const { return wc_; }
    double* real() { return real_; }
    std::complex<double>* freq() { return reinterpret_cast<std::complex<double>*>(freq_); }

    void forward() { fftw_execute(fwd_); }
    // c2r destroys its input and is unnormalized; scale by 1/(h*w) after.
    void inverse() { fftw_execute(inv_); }
    double norm() const { return 1.0 / (double(h_) * double(w_)); }

private:
    int h_, w_, wc_;
    double* real_;
    fftw_complex* freq_;
    fftw_plan fwd_, inv_;
};

// Smallest size >= n whose factors are all in {2,3,5,7}; FFTW handles such
// sizes efficiently.
inline int next_fast_size(int n) {
    if (n <= 1) return 1;
    for (int m = n;; ++m) {
        int r = m;
        for (int p : {2, 3, 5, 7})
            while (r % p == 0) r /= p;
        if (r == 1) return m;
    }
}

// Mirror (reflective) index into [0, n): ... 2 1 0 | 0 1 2 ... n-1 | n-1 ...
inline int mirror_index(int q, int n) {
    if (n == 1) return 0;
    const int period = 2 * n;
    int m = q % period;
    if (m < 0) m += period;
    return m < n ? m : period - 1 - m;
}

}  // namespace camsim::detail
