#pragma once

// Eulerian solution operators on the periodic grid: heat semigroup, Riesz
// transforms, the Leray-type projector H = I + R (x) R, the Duhamel
// integrals U (velocity from stress history) and G (velocity gradient from
// stress history), general degree-0 Fourier multipliers, and the advection
// commutators.
//
// All singular-integral symbols annihilate the k = 0 mode; sign-ambiguous
// (odd) symbols are zeroed at Nyquist modes. The Duhamel quadrature treats
// the stress as piecewise linear in time between frames and integrates the
// exponential weights exactly per mode.

#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "lagfix/grid.hpp"

namespace lagfix {

// ---------------------------------------------------------------------------
// heat semigroup e^{nu t Laplacian}

inline Field heat_semigroup(const Field& f, double t, double nu = 1.0) {
    if (t < 0) throw std::invalid_argument("heat_semigroup: t must be >= 0");
    f.require_finite("heat_semigroup");
    if (t == 0) return f;
    SpectralField s = to_spectral(f);
    for (auto& comp : s.comp) {
        for_each_mode(f.grid(), [&](std::size_t idx, const std::array<int, 3>&, double k2, bool) {
            comp[idx] *= std::exp(-nu * k2 * t);
        });
    }
    return to_real(s, f.symmetric());
}

// ---------------------------------------------------------------------------
// degree-0 homogeneous Fourier multipliers (Calderon-Zygmund class)

// The symbol fills an (out_comp x in_comp) complex matrix, row-major, from
// the unit wavevector. A 1x1 multiplier is applied componentwise to fields
// of any rank. Symbols must satisfy m(-k) = conj(m(k)) for real output; the
// built-in ones do.
struct Multiplier {
    int in_comp = 1;
    int out_comp = 1;
    std::function<void(const std::array<double, 3>& khat, int d, std::complex<double>* M)> symbol;

    // degree-0 homogeneity and boundedness, checked on sampled directions
    void check(int d) const {
        std::vector<std::complex<double>> a(out_comp * in_comp), b(out_comp * in_comp);
        for (int s = 0; s < 16; ++s) {
            std::array<double, 3> k{0, 0, 0};
            double norm2 = 0;
            for (int i = 0; i < d; ++i) {
                k[i] = std::cos(1.7 * (s + 1) + 0.9 * i) + 0.05;
                norm2 += k[i] * k[i];
            }
            const double norm = std::sqrt(norm2);
            std::array<double, 3> khat{0, 0, 0};
            for (int i = 0; i < d; ++i) khat[i] = k[i] / norm;
            symbol(khat, d, a.data());
            symbol(khat, d, b.data());
            for (std::size_t q = 0; q < a.size(); ++q) {
                if (std::abs(a[q] - b[q]) > 1e-12)
                    throw std::invalid_argument("Multiplier: symbol not a function of the direction");
                if (!(std::abs(a[q]) < 1e6)) throw std::invalid_argument("Multiplier: symbol unbounded");
            }
        }
    }
};

inline Field cz_apply(const Multiplier& K, const Field& f) {
    f.require_finite("cz_apply");
    const GridSpec& g = f.grid();
    const bool componentwise = (K.in_comp == 1 && K.out_comp == 1);
    if (!componentwise && K.in_comp != f.ncomp())
        throw std::invalid_argument("cz_apply: component count mismatch");

    SpectralField in = to_spectral(f);
    SpectralField out;
    out.grid = g;
    const int nout = componentwise ? f.ncomp() : K.out_comp;
    out.rank = componentwise ? f.rank() : (K.out_comp == 1 ? 0 : (K.out_comp == g.d ? 1 : 2));
    out.comp.assign(nout, std::vector<fft::Complex>(in.nmodes(), fft::Complex(0, 0)));

    std::vector<std::complex<double>> M(K.out_comp * K.in_comp);
    for_each_mode(g, [&](std::size_t idx, const std::array<int, 3>& m, double k2, bool nyq) {
        if (k2 == 0.0 || nyq) return;
        const double kn = std::sqrt(double(m[0]) * m[0] + double(m[1]) * m[1] + double(m[2]) * m[2]);
        const std::array<double, 3> khat{m[0] / kn, m[1] / kn, m[2] / kn};
        K.symbol(khat, g.d, M.data());
        if (componentwise) {
            for (int c = 0; c < nout; ++c) out.comp[c][idx] = M[0] * in.comp[c][idx];
        } else {
            for (int r = 0; r < K.out_comp; ++r) {
                fft::Complex acc(0, 0);
                for (int c = 0; c < K.in_comp; ++c) acc += M[r * K.in_comp + c] * in.comp[c][idx];
                out.comp[r][idx] = acc;
            }
        }
    });
    return to_real(out);
}

inline Multiplier riesz_multiplier(int axis) {
    Multiplier K;
    K.symbol = [axis](const std::array<double, 3>& khat, int, std::complex<double>* M) {
        M[0] = std::complex<double>(0.0, khat[axis]);
    };
    return K;
}

// R_i R_j as a scalar symbol: -khat_i khat_j
inline Multiplier riesz_pair_multiplier(int i, int j) {
    Multiplier K;
    K.symbol = [i, j](const std::array<double, 3>& khat, int, std::complex<double>* M) {
        M[0] = std::complex<double>(-khat[i] * khat[j], 0.0);
    };
    return K;
}

inline Multiplier identity_multiplier() {
    Multiplier K;
    K.symbol = [](const std::array<double, 3>&, int, std::complex<double>* M) {
        M[0] = std::complex<double>(1.0, 0.0);
    };
    return K;
}

// H = I + R (x) R on vectors: I - khat khat^T
inline Multiplier leray_multiplier(int d) {
    Multiplier K;
    K.in_comp = K.out_comp = d;
    K.symbol = [](const std::array<double, 3>& khat, int d_, std::complex<double>* M) {
        for (int i = 0; i < d_; ++i)
            for (int j = 0; j < d_; ++j)
                M[i * d_ + j] = std::complex<double>((i == j ? 1.0 : 0.0) - khat[i] * khat[j], 0.0);
    };
    return K;
}

// (R H R . sigma)_{ij} = Rhat_j Rhat_m H_{il} sigma_{lm} on rank-2 fields
inline Multiplier riesz_leray_riesz_multiplier(int d) {
    Multiplier K;
    K.in_comp = K.out_comp = d * d;
    K.symbol = [](const std::array<double, 3>& khat, int d_, std::complex<double>* M) {
        for (int i = 0; i < d_; ++i)
            for (int j = 0; j < d_; ++j)
                for (int l = 0; l < d_; ++l)
                    for (int mm = 0; mm < d_; ++mm) {
                        const double H_il = (i == l ? 1.0 : 0.0) - khat[i] * khat[l];
                        M[(i * d_ + j) * d_ * d_ + (l * d_ + mm)] =
                            std::complex<double>(-khat[j] * khat[mm] * H_il, 0.0);
                    }
    };
    return K;
}

// ---------------------------------------------------------------------------
// Riesz transform and Leray projection (direct spectral forms)

inline Field riesz(const Field& f, int axis) {
    if (axis < 0 || axis >= f.grid().d) throw std::invalid_argument("riesz: bad axis");
    return cz_apply(riesz_multiplier(axis), f);
}

// H v: removes the gradient part; output divergence-free, k = 0 annihilated
inline Field leray_project(const Field& v) {
    if (v.rank() != 1) throw std::invalid_argument("leray_project: rank-1 field required");
    v.require_finite("leray_project");
    const GridSpec& g = v.grid();
    const int d = g.d;
    const double kunit = two_pi / g.L;
    SpectralField s = to_spectral(v);
    for_each_mode(g, [&](std::size_t idx, const std::array<int, 3>& m, double k2, bool) {
        if (k2 == 0.0) {
            for (int i = 0; i < d; ++i) s.comp[i][idx] = 0.0;
            return;
        }
        fft::Complex kdotv(0, 0);
        for (int j = 0; j < d; ++j) kdotv += kunit * m[j] * s.comp[j][idx];
        for (int i = 0; i < d; ++i) s.comp[i][idx] -= kunit * m[i] * kdotv / k2;
    });
    return to_real(s);
}

inline double max_divergence(const Field& v) { return max_abs(divergence(v)); }

// ---------------------------------------------------------------------------
// Duhamel operators

namespace detail {

// phi0(x) = (1 - e^-x)/x, phi1(x) = (1 - (1+x) e^-x)/x^2, stable near 0
inline double phi0(double x) {
    if (x < 1e-5) return 1.0 - x / 2.0 + x * x / 6.0;
    return -std::expm1(-x) / x;
}
inline double phi1(double x) {
    if (x < 1e-4) return 0.5 - x / 3.0 + x * x / 8.0;
    return (1.0 - (1.0 + x) * std::exp(-x)) / (x * x);
}

// Weights (Ja, Jb) with
//   int_{ta}^{tb} e^{-kappa (t-s)} w(s) ds = Ja w(ta) + Jb w(tb)
// for w linear on [ta, tb] and t >= tb.
inline std::pair<double, double> duhamel_weights(double kappa, double t, double ta, double tb) {
    const double dt = tb - ta;
    if (dt <= 0) return {0.0, 0.0};
    const double x = kappa * dt;
    const double lead = std::exp(-kappa * (t - tb));
    const double p0 = phi0(x), p1 = phi1(x);
    return {lead * dt * p1, lead * dt * (p0 - p1)};
}

// Spectral integrand (H div sigma)^ per frame, rank-1 complex arrays.
inline std::vector<std::vector<fft::Complex>> h_div_spectral(const Field& sigma) {
    if (sigma.rank() != 2) throw std::invalid_argument("duhamel: rank-2 stress required");
    sigma.require_finite("duhamel");
    const GridSpec& g = sigma.grid();
    const int d = g.d;
    const double kunit = two_pi / g.L;
    SpectralField s = to_spectral(sigma);
    std::vector<std::vector<fft::Complex>> out(d, std::vector<fft::Complex>(s.nmodes(), fft::Complex(0, 0)));
    for_each_mode(g, [&](std::size_t idx, const std::array<int, 3>& m, double k2, bool nyq) {
        if (k2 == 0.0 || nyq) return;
        std::array<fft::Complex, 3> w{};
        for (int i = 0; i < d; ++i) {
            fft::Complex acc(0, 0);
            for (int j = 0; j < d; ++j) acc += fft::Complex(0.0, kunit * m[j]) * s.comp[i * d + j][idx];
            w[i] = acc;
        }
        fft::Complex kdotw(0, 0);
        for (int j = 0; j < d; ++j) kdotw += kunit * m[j] * w[j];
        for (int i = 0; i < d; ++i) out[i][idx] = w[i] - kunit * m[i] * kdotw / k2;
    });
    return out;
}

// Velocity-level Duhamel accumulator. The rank-2 gradient output only
// differs by the time-independent factor i k_j, applied on extraction.
class DuhamelCore {
  public:
    DuhamelCore(const Path& sigma, double nu) : grid_(sigma.grid()), time_(sigma.time), nu_(nu) {
        const std::size_t nm = fft::spectral_size(grid_.dims());
        kappa_.resize(nm);
        for_each_mode(grid_, [&](std::size_t idx, const std::array<int, 3>&, double k2, bool) {
            kappa_[idx] = nu * k2;
        });
        W_.reserve(sigma.frames.size());
        for (const auto& f : sigma.frames) W_.push_back(h_div_spectral(f));
    }

    const GridSpec& grid() const { return grid_; }
    const TimeGrid& time() const { return time_; }

    // Visits the spectral velocity accumulator at every node in order:
    // sink(m, acc) with acc[comp][mode].
    template <typename Sink>
    void run_nodes(Sink&& sink) const {
        const int d = grid_.d;
        const std::size_t nm = kappa_.size();
        const double dt = time_.dt();
        std::vector<double> E(nm), Ja(nm), Jb(nm);
        for (std::size_t q = 0; q < nm; ++q) {
            E[q] = std::exp(-kappa_[q] * dt);
            auto [ja, jb] = duhamel_weights(kappa_[q], dt, 0.0, dt);
            Ja[q] = ja;
            Jb[q] = jb;
        }
        std::vector<std::vector<fft::Complex>> acc(d, std::vector<fft::Complex>(nm, fft::Complex(0, 0)));
        sink(0, acc);
        for (int m = 0; m < time_.M; ++m) {
            for (int c = 0; c < d; ++c) {
                auto& a = acc[c];
                const auto& wa = W_[m][c];
                const auto& wb = W_[m + 1][c];
                for (std::size_t q = 0; q < nm; ++q) a[q] = E[q] * a[q] + Ja[q] * wa[q] + Jb[q] * wb[q];
            }
            sink(m + 1, acc);
        }
    }

    // Spectral velocity accumulator at one time 0 <= t <= T.
    std::vector<std::vector<fft::Complex>> eval_at(double t) const {
        if (t < 0 || t > time_.T * (1 + 1e-12))
            throw std::invalid_argument("duhamel: t outside the path's time grid");
        t = std::min(t, time_.T);
        const int d = grid_.d;
        const std::size_t nm = kappa_.size();
        const double dt = time_.dt();
        int mlo = static_cast<int>(std::floor(t / dt + 1e-12));
        mlo = std::min(mlo, time_.M);
        std::vector<std::vector<fft::Complex>> acc(d, std::vector<fft::Complex>(nm, fft::Complex(0, 0)));
        for (int m = 0; m < mlo; ++m) {
            const double ta = time_.node(m), tb = time_.node(m + 1);
            for (int c = 0; c < d; ++c) {
                auto& a = acc[c];
                const auto& wa = W_[m][c];
                const auto& wb = W_[m + 1][c];
                for (std::size_t q = 0; q < nm; ++q) {
                    auto [ja, jb] = duhamel_weights(kappa_[q], t, ta, tb);
                    a[q] += ja * wa[q] + jb * wb[q];
                }
            }
        }
        const double tlo = time_.node(mlo);
        if (t > tlo && mlo < time_.M) {
            // partial interval [t_mlo, t]; the linear stress endpoint at t
            // interpolates the bracketing frames
            const double theta = (t - tlo) / dt;
            for (int c = 0; c < d; ++c) {
                auto& a = acc[c];
                const auto& wa = W_[mlo][c];
                const auto& wb = W_[mlo + 1][c];
                for (std::size_t q = 0; q < nm; ++q) {
                    auto [ja, jb] = duhamel_weights(kappa_[q], t, tlo, t);
                    const fft::Complex wt = (1.0 - theta) * wa[q] + theta * wb[q];
                    a[q] += ja * wa[q] + jb * wt;
                }
            }
        }
        return acc;
    }

    Field velocity_field(const std::vector<std::vector<fft::Complex>>& acc) const {
        SpectralField s;
        s.grid = grid_;
        s.rank = 1;
        s.comp = acc;
        return to_real(s);
    }

    Field gradient_field(const std::vector<std::vector<fft::Complex>>& acc) const {
        const int d = grid_.d;
        const double kunit = two_pi / grid_.L;
        SpectralField s;
        s.grid = grid_;
        s.rank = 2;
        s.comp.assign(d * d, std::vector<fft::Complex>(kappa_.size(), fft::Complex(0, 0)));
        for_each_mode(grid_, [&](std::size_t idx, const std::array<int, 3>& m, double k2, bool nyq) {
            if (k2 == 0.0 || nyq) return;
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j)
                    s.comp[i * d + j][idx] = fft::Complex(0.0, kunit * m[j]) * acc[i][idx];
        });
        return to_real(s);
    }

  private:
    GridSpec grid_;
    TimeGrid time_;
    double nu_;
    std::vector<double> kappa_;
    std::vector<std::vector<std::vector<fft::Complex>>> W_;  // frame -> comp -> mode
};

}  // namespace detail

// U(sigma)(t): divergence-free velocity from the stress history; vanishes
// at t = 0.
inline Field duhamel_velocity(const Path& sigma, double t, double nu = 1.0) {
    detail::DuhamelCore core(sigma, nu);
    return core.velocity_field(core.eval_at(t));
}

inline std::vector<Field> duhamel_velocity_nodes(const Path& sigma, double nu = 1.0) {
    detail::DuhamelCore core(sigma, nu);
    std::vector<Field> out(sigma.frames.size());
    core.run_nodes([&](int m, const auto& acc) { out[m] = core.velocity_field(acc); });
    return out;
}

// G(sigma)(t): velocity gradient from the stress history.
inline Field duhamel_gradient(const Path& sigma, double t, double nu = 1.0) {
    detail::DuhamelCore core(sigma, nu);
    return core.gradient_field(core.eval_at(t));
}

inline std::vector<Field> duhamel_gradient_nodes(const Path& sigma, double nu = 1.0) {
    detail::DuhamelCore core(sigma, nu);
    std::vector<Field> out(sigma.frames.size());
    core.run_nodes([&](int m, const auto& acc) { out[m] = core.gradient_field(acc); });
    return out;
}

// Closed form of G on a time-independent stress:
// (1/nu) (I - e^{nu t Laplacian}) R H R . sigma (exact spectral evaluation).
inline Field duhamel_gradient_steady(const Field& sigma, double t, double nu = 1.0) {
    if (t < 0) throw std::invalid_argument("duhamel_gradient_steady: t must be >= 0");
    const GridSpec& g = sigma.grid();
    const int d = g.d;
    const double kunit = two_pi / g.L;
    auto W = detail::h_div_spectral(sigma);
    SpectralField s;
    s.grid = g;
    s.rank = 2;
    s.comp.assign(d * d, std::vector<fft::Complex>(W[0].size(), fft::Complex(0, 0)));
    for_each_mode(g, [&](std::size_t idx, const std::array<int, 3>& m, double k2, bool nyq) {
        if (k2 == 0.0 || nyq) return;
        const double factor = -std::expm1(-nu * k2 * t) / (nu * k2);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                s.comp[i * d + j][idx] = factor * fft::Complex(0.0, kunit * m[j]) * W[i][idx];
    });
    return to_real(s);
}

// ---------------------------------------------------------------------------
// commutators

// [eta . grad, K] f = eta . grad(K f) - K(eta . grad f)
inline Field advection_commutator(const Field& eta, const Multiplier& K, const Field& f) {
    if (!(eta.grid() == f.grid())) throw std::invalid_argument("advection_commutator: grid mismatch");
    Field t1 = advect(eta, cz_apply(K, f));
    Field t2 = cz_apply(K, advect(eta, f));
    return t1 - t2;
}

namespace detail {

inline Field path_frame_at(const Path& p, double t) {
    if (t < 0 || t > p.time.T * (1 + 1e-12))
        throw std::invalid_argument("path_frame_at: t outside time grid");
    t = std::min(t, p.time.T);
    const double dt = p.time.dt();
    int m = static_cast<int>(std::floor(t / dt + 1e-12));
    m = std::min(m, p.time.M);
    const double theta = (t - p.time.node(m)) / dt;
    if (theta <= 1e-12 || m == p.time.M) return p.frames[m];
    Field r = (1.0 - theta) * p.frames[m];
    axpy(theta, p.frames[m + 1], r);
    return r;
}

inline Path advected_path(const Path& eta, const Path& f) {
    if (!(eta.time == f.time) || !(eta.grid() == f.grid()))
        throw std::invalid_argument("commutator: eta and stress must share grids");
    Path out;
    out.time = f.time;
    out.frames.reserve(f.frames.size());
    for (std::size_t m = 0; m < f.frames.size(); ++m) out.frames.push_back(advect(eta.frames[m], f.frames[m]));
    return out;
}

}  // namespace detail

// [eta . grad, U](sigma)(t) = eta(t) . grad U(sigma)(t) - U(eta . grad sigma)(t)
inline Field duhamel_velocity_commutator(const Path& eta, const Path& sigma, double t, double nu = 1.0) {
    Field term1 = advect(detail::path_frame_at(eta, t), duhamel_velocity(sigma, t, nu));
    Field term2 = duhamel_velocity(detail::advected_path(eta, sigma), t, nu);
    return term1 - term2;
}

// [eta . grad, G](sigma)(t) = eta(t) . grad G(sigma)(t) - G(eta . grad sigma)(t)
inline Field duhamel_gradient_commutator(const Path& eta, const Path& sigma, double t, double nu = 1.0) {
    Field term1 = advect(detail::path_frame_at(eta, t), duhamel_gradient(sigma, t, nu));
    Field term2 = duhamel_gradient(detail::advected_path(eta, sigma), t, nu);
    return term1 - term2;
}

}  // namespace lagfix
