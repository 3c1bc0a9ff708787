#pragma once

// Thin FFTW3 wrapper: real<->half-complex transforms on small periodic grids.
// Plans are cached per (dims, direction) and created with FFTW_ESTIMATE |
// FFTW_UNALIGNED so results are deterministic run-to-run and buffers can be
// plain std::vector storage.

#include <complex>
#include <map>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

namespace lagfix::fft {

using Complex = std::complex<double>;

inline std::size_t real_size(const std::vector<int>& dims) {
    std::size_t m = 1;
    for (int d : dims) m *= static_cast<std::size_t>(d);
    return m;
}

inline std::size_t spectral_size(const std::vector<int>& dims) {
    std::size_t m = 1;
    for (std::size_t a = 0; a + 1 < dims.size(); ++a) m *= static_cast<std::size_t>(dims[a]);
    return m * static_cast<std::size_t>(dims.back() / 2 + 1);
}

namespace detail {

struct PlanCache {
    std::map<std::pair<std::vector<int>, int>, fftw_plan> plans;
    ~PlanCache() {
        for (auto& [key, p] : plans) fftw_destroy_plan(p);
    }

    fftw_plan get(const std::vector<int>& dims, int dir, double* re, Complex* sp) {
        auto key = std::make_pair(dims, dir);
        auto it = plans.find(key);
        if (it != plans.end()) return it->second;
        fftw_plan p = nullptr;
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        if (dir > 0)
            p = fftw_plan_dft_r2c(static_cast<int>(dims.size()), dims.data(), re,
                                  reinterpret_cast<fftw_complex*>(sp), flags);
        else
            p = fftw_plan_dft_c2r(static_cast<int>(dims.size()), dims.data(),
                                  reinterpret_cast<fftw_complex*>(sp), re, flags);
        if (!p) throw std::runtime_error("fftw plan creation failed");
        plans.emplace(key, p);
        return p;
    }
};

inline PlanCache& cache() {
    static PlanCache c;
    return c;
}

}  // namespace detail

// Unnormalized forward transform (FFTW convention, e^{-ik.x} sum).
inline std::vector<Complex> forward(const std::vector<double>& in, const std::vector<int>& dims) {
    if (in.size() != real_size(dims)) throw std::invalid_argument("fft::forward: size mismatch");
    std::vector<double> tmp(in);
    std::vector<Complex> out(spectral_size(dims));
    fftw_plan p = detail::cache().get(dims, +1, tmp.data(), out.data());
    fftw_execute_dft_r2c(p, tmp.data(), reinterpret_cast<fftw_complex*>(out.data()));
    return out;
}

// Inverse transform, normalized by 1/N so that inverse(forward(f)) == f.
inline std::vector<double> inverse(const std::vector<Complex>& in, const std::vector<int>& dims) {
    if (in.size() != spectral_size(dims)) throw std::invalid_argument("fft::inverse: size mismatch");
    std::vector<Complex> tmp(in);  // c2r destroys its input
    std::vector<double> out(real_size(dims));
    fftw_plan p = detail::cache().get(dims, -1, out.data(), tmp.data());
    fftw_execute_dft_c2r(p, reinterpret_cast<fftw_complex*>(tmp.data()), out.data());
    const double scale = 1.0 / static_cast<double>(real_size(dims));
    for (double& v : out) v *= scale;
    return out;
}

}  // namespace lagfix::fft
