#pragma once

// Discrete estimators for the function- and path-space norms: L^inf, L^p,
// Holder seminorms by offset sampling, C^{alpha,p} and C^{1+alpha,p}, and
// the time-Holder path norms together with the composite quantities N(T),
// M(T), M1(T) and the product norm P.
//
// Holder estimates are sampling lower bounds. The spatial pair set walks
// axis and diagonal directions; separations are either every grid multiple
// up to L/2 (default) or dyadic only (cheap mode used inside the solver
// loop). Time pairs follow the same scheme.

#include <cmath>
#include <functional>
#include <vector>

#include "lagfix/grid.hpp"

namespace lagfix {

struct StencilSpec {
    enum class Scales { AllSeparations, Dyadic };
    enum class TimePairs { AllPairs, Dyadic };
    Scales scales = Scales::AllSeparations;
    bool diagonals = true;
    TimePairs time_pairs = TimePairs::AllPairs;
};

struct NormParams {
    double alpha = 0.5;  // spatial Holder exponent, (0,1)
    double beta = 0.75;  // time Holder exponent, (1/2,1)
    double p = 2.0;      // Lebesgue exponent, (1,inf)
    StencilSpec stencil;

    bool in_theorem_range() const {
        return alpha > 0 && alpha < 1 && beta > 0.5 && beta < 1 && p > 1 && std::isfinite(p);
    }
    void validate() const {
        if (!(alpha > 0 && alpha < 1)) throw std::invalid_argument("NormParams: alpha must lie in (0,1)");
        if (!(beta > 0 && beta <= 1)) throw std::invalid_argument("NormParams: beta must lie in (0,1]");
        if (!(p >= 1)) throw std::invalid_argument("NormParams: p must be >= 1");
    }
};

// pointwise Euclidean magnitude across components, maximized
inline double sup_norm(const Field& f) {
    const std::size_t npts = f.npoints();
    double worst = 0.0;
    for (std::size_t q = 0; q < npts; ++q) {
        double s = 0.0;
        for (int c = 0; c < f.ncomp(); ++c) {
            const double v = f.comp(c)[q];
            s += v * v;
        }
        worst = std::max(worst, s);
    }
    return std::sqrt(worst);
}

// rectangle rule on the uniform grid
inline double lp_norm(const Field& f, double p) {
    const std::size_t npts = f.npoints();
    const GridSpec& g = f.grid();
    double acc = 0.0;
    if (p == 2.0) {
        for (int c = 0; c < f.ncomp(); ++c)
            for (double v : f.comp(c)) acc += v * v;
    } else {
        for (std::size_t q = 0; q < npts; ++q) {
            double s = 0.0;
            for (int c = 0; c < f.ncomp(); ++c) {
                const double v = f.comp(c)[q];
                s += v * v;
            }
            acc += std::pow(s, 0.5 * p);
        }
    }
    const double cell = std::pow(g.h(), g.d);
    return std::pow(cell * acc, 1.0 / p);
}

namespace detail {

inline std::vector<std::array<int, 3>> stencil_directions(int d, bool diagonals) {
    std::vector<std::array<int, 3>> dirs;
    for (int a = 0; a < d; ++a) {
        std::array<int, 3> e{0, 0, 0};
        e[a] = 1;
        dirs.push_back(e);
    }
    if (diagonals) {
        if (d == 2) {
            dirs.push_back({1, 1, 0});
            dirs.push_back({1, -1, 0});
        } else {
            dirs.push_back({1, 1, 0});
            dirs.push_back({1, -1, 0});
            dirs.push_back({1, 0, 1});
            dirs.push_back({1, 0, -1});
            dirs.push_back({0, 1, 1});
            dirs.push_back({0, 1, -1});
            dirs.push_back({1, 1, 1});
            dirs.push_back({1, -1, -1});
            dirs.push_back({1, -1, 1});
            dirs.push_back({1, 1, -1});
        }
    }
    return dirs;
}

inline std::vector<int> stencil_separations(int n, StencilSpec::Scales mode) {
    std::vector<int> seps;
    if (mode == StencilSpec::Scales::AllSeparations) {
        for (int s = 1; s <= n / 2; ++s) seps.push_back(s);
    } else {
        for (int s = 1; s <= n / 2; s *= 2) seps.push_back(s);
    }
    return seps;
}

// max over grid points of sum_c (f_c(x+o) - f_c(x))^2 for the offset o
// given by direction e and separation s (grid steps)
inline double max_sq_increment(const Field& f, const std::array<int, 3>& e, int s) {
    const GridSpec& g = f.grid();
    const int n = g.n;
    const int nc = f.ncomp();
    std::array<std::vector<int>, 3> wrap;
    for (int a = 0; a < g.d; ++a) {
        wrap[a].resize(n);
        for (int j = 0; j < n; ++j) wrap[a][j] = ((j + e[a] * s) % n + n) % n;
    }
    double worst = 0.0;
    if (g.d == 2) {
        for (int j0 = 0; j0 < n; ++j0) {
            const std::size_t rb = static_cast<std::size_t>(wrap[0][j0]) * n;
            const std::size_t ra = static_cast<std::size_t>(j0) * n;
            for (int j1 = 0; j1 < n; ++j1) {
                const std::size_t qa = ra + j1;
                const std::size_t qb = rb + wrap[1][j1];
                double sum = 0.0;
                for (int c = 0; c < nc; ++c) {
                    const double dv = f.comp(c)[qb] - f.comp(c)[qa];
                    sum += dv * dv;
                }
                worst = std::max(worst, sum);
            }
        }
    } else {
        for (int j0 = 0; j0 < n; ++j0)
            for (int j1 = 0; j1 < n; ++j1) {
                const std::size_t ra = (static_cast<std::size_t>(j0) * n + j1) * n;
                const std::size_t rb = (static_cast<std::size_t>(wrap[0][j0]) * n + wrap[1][j1]) * n;
                for (int j2 = 0; j2 < n; ++j2) {
                    const std::size_t qa = ra + j2;
                    const std::size_t qb = rb + wrap[2][j2];
                    double sum = 0.0;
                    for (int c = 0; c < nc; ++c) {
                        const double dv = f.comp(c)[qb] - f.comp(c)[qa];
                        sum += dv * dv;
                    }
                    worst = std::max(worst, sum);
                }
            }
    }
    return worst;
}

}  // namespace detail

// sup over sampled pairs of |f(x) - f(y)| / dist(x,y)^alpha
inline double holder_seminorm(const Field& f, double alpha, const StencilSpec& stencil = {}) {
    if (!(alpha > 0 && alpha <= 1)) throw std::invalid_argument("holder_seminorm: alpha must lie in (0,1]");
    const GridSpec& g = f.grid();
    const auto dirs = detail::stencil_directions(g.d, stencil.diagonals);
    const auto seps = detail::stencil_separations(g.n, stencil.scales);
    double worst = 0.0;
    for (const auto& e : dirs) {
        double en2 = 0.0;
        for (int a = 0; a < g.d; ++a) en2 += double(e[a]) * e[a];
        for (int s : seps) {
            const double dist = g.h() * s * std::sqrt(en2);
            const double w = std::pow(dist, -2.0 * alpha);
            worst = std::max(worst, detail::max_sq_increment(f, e, s) * w);
        }
    }
    return std::sqrt(worst);
}

// ||f||_{C^alpha} = ||f||_inf + [f]_alpha
inline double holder_norm(const Field& f, double alpha, const StencilSpec& stencil = {}) {
    return sup_norm(f) + holder_seminorm(f, alpha, stencil);
}

// ||f||_{alpha,p} = ||f||_{C^alpha} + ||f||_{L^p}
inline double norm_alpha_p(const Field& f, const NormParams& np) {
    return holder_norm(f, np.alpha, np.stencil) + lp_norm(f, np.p);
}

// ||f||_{1+alpha,p} = ||f||_{C^{1+alpha}} + ||f||_{W^{1,p}} with the
// gradient supplied (or computed spectrally).
inline double norm_1alpha_p(const Field& f, const Field& grad_f, const NormParams& np) {
    const double c1a = sup_norm(f) + sup_norm(grad_f) + holder_seminorm(grad_f, np.alpha, np.stencil);
    const double w1p = lp_norm(f, np.p) + lp_norm(grad_f, np.p);
    return c1a + w1p;
}

inline double norm_1alpha_p(const Field& f, const NormParams& np) {
    return norm_1alpha_p(f, gradient(f), np);
}

// ---------------------------------------------------------------------------
// path norms

namespace detail {

inline std::vector<std::pair<int, int>> time_pair_set(int M, StencilSpec::TimePairs mode) {
    std::vector<std::pair<int, int>> pairs;
    if (mode == StencilSpec::TimePairs::AllPairs) {
        for (int a = 0; a < M; ++a)
            for (int b = a + 1; b <= M; ++b) pairs.emplace_back(a, b);
    } else {
        for (int s = 1; s <= M; s *= 2)
            for (int a = 0; a + s <= M; ++a) pairs.emplace_back(a, a + s);
        bool have_full = false;
        for (auto& [a, b] : pairs)
            if (a == 0 && b == M) have_full = true;
        if (!have_full && M >= 1) pairs.emplace_back(0, M);
    }
    return pairs;
}

}  // namespace detail

// C^beta(0,T; .) norm: sup-in-time plus the time-Holder seminorm over the
// sampled node pairs. Single-frame paths return the sup part only.
inline double path_norm_beta(const Path& path, double beta,
                             const std::function<double(const Field&)>& spatial_norm,
                             StencilSpec::TimePairs pairs_mode = StencilSpec::TimePairs::AllPairs) {
    if (!(beta > 0 && beta <= 1)) throw std::invalid_argument("path_norm_beta: beta must lie in (0,1]");
    double sup = 0.0;
    for (const auto& f : path.frames) sup = std::max(sup, spatial_norm(f));
    if (path.frames.size() < 2) return sup;
    double semi = 0.0;
    for (auto [a, b] : detail::time_pair_set(static_cast<int>(path.frames.size()) - 1, pairs_mode)) {
        const double dt = path.time.node(b) - path.time.node(a);
        if (dt <= 0) continue;
        semi = std::max(semi, spatial_norm(path.frames[b] - path.frames[a]) / std::pow(dt, beta));
    }
    return sup + semi;
}

inline double path_norm_lip(const Path& path, const std::function<double(const Field&)>& spatial_norm,
                            StencilSpec::TimePairs pairs_mode = StencilSpec::TimePairs::AllPairs) {
    return path_norm_beta(path, 1.0, spatial_norm, pairs_mode);
}

inline double path_sup(const Path& path, const std::function<double(const Field&)>& spatial_norm) {
    double sup = 0.0;
    for (const auto& f : path.frames) sup = std::max(sup, spatial_norm(f));
    return sup;
}

// C^beta(0,T; C^{alpha,p})
inline double path_cbeta_alpha_p(const Path& path, const NormParams& np) {
    return path_norm_beta(
        path, np.beta, [&](const Field& f) { return norm_alpha_p(f, np); }, np.stencil.time_pairs);
}

// C^beta(0,T; C^{1+alpha,p}) with gradients precomputed once per frame
inline double path_cbeta_1alpha_p(const Path& path, const NormParams& np) {
    std::vector<Field> grads;
    grads.reserve(path.frames.size());
    for (const auto& f : path.frames) grads.push_back(gradient(f));
    double sup = 0.0;
    for (std::size_t m = 0; m < path.frames.size(); ++m)
        sup = std::max(sup, norm_1alpha_p(path.frames[m], grads[m], np));
    if (path.frames.size() < 2) return sup;
    double semi = 0.0;
    for (auto [a, b] :
         detail::time_pair_set(static_cast<int>(path.frames.size()) - 1, np.stencil.time_pairs)) {
        const double dt = path.time.node(b) - path.time.node(a);
        if (dt <= 0) continue;
        const double nv = norm_1alpha_p(path.frames[b] - path.frames[a], grads[b] - grads[a], np);
        semi = std::max(semi, nv / std::pow(dt, np.beta));
    }
    return sup + semi;
}

inline double path_linf_alpha_p(const Path& path, const NormParams& np) {
    return path_sup(path, [&](const Field& f) { return norm_alpha_p(f, np); });
}

inline double path_linf_1alpha_p(const Path& path, const NormParams& np) {
    return path_sup(path, [&](const Field& f) { return norm_1alpha_p(f, np); });
}

// ---------------------------------------------------------------------------
// composite norm report

struct NormReport {
    // single-field measurements
    double l_inf = 0.0;
    double l_p = 0.0;
    double holder_semi = 0.0;
    double c1_alpha_p = 0.0;
    // path measurements
    double path_beta = 0.0;
    double path_lip = 0.0;
    // composites
    double N = 0.0;
    double M = 0.0;
    double M1 = 0.0;
    double Pnorm = 0.0;
};

// Assembles N(T), M(T), M1(T) and the (delta-weighted) product norm P from
// direction paths X', tau', optionally v' and the initial-velocity
// perturbation u'(0). Null inputs contribute zero.
inline NormReport composite_norms(const Path* Xprime, const Path* tauprime, const Path* vprime,
                                  const Field* uprime0, const NormParams& np, double delta = 0.25) {
    NormReport r;
    double Xp_cb_ap = 0, Xp_cb_1ap = 0, Xp_li_1ap = 0;
    double tp_cb_ap = 0, tp_li_ap = 0;
    double vp_li_1ap = 0;
    double u0_ap = 0, u0_1ap = 0;
    if (Xprime) {
        Xp_cb_ap = path_cbeta_alpha_p(*Xprime, np);
        Xp_cb_1ap = path_cbeta_1alpha_p(*Xprime, np);
        Xp_li_1ap = path_linf_1alpha_p(*Xprime, np);
        r.path_beta = Xp_cb_1ap;
        r.path_lip = path_norm_lip(
            *Xprime, [&](const Field& f) { return norm_alpha_p(f, np); }, np.stencil.time_pairs);
    }
    if (tauprime) {
        tp_cb_ap = path_cbeta_alpha_p(*tauprime, np);
        tp_li_ap = path_linf_alpha_p(*tauprime, np);
    }
    if (vprime) vp_li_1ap = path_linf_1alpha_p(*vprime, np);
    if (uprime0) {
        u0_ap = norm_alpha_p(*uprime0, np);
        u0_1ap = norm_1alpha_p(*uprime0, np);
        r.l_inf = sup_norm(*uprime0);
        r.l_p = lp_norm(*uprime0, np.p);
        r.holder_semi = holder_seminorm(*uprime0, np.alpha, np.stencil);
        r.c1_alpha_p = u0_1ap;
    }
    r.N = Xp_cb_ap + Xp_li_1ap + tp_li_ap + u0_ap;
    r.M = Xp_cb_1ap + tp_cb_ap + u0_1ap;
    r.M1 = r.M + vp_li_1ap;
    r.Pnorm = Xp_cb_1ap + tp_cb_ap + (vprime ? delta * vp_li_1ap : 0.0);
    return r;
}

}  // namespace lagfix
