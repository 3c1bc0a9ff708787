#pragma once

// Lagrangian flow maps X = id + chi on the torus: inversion by fixed-point
// iteration with a Newton fallback, composition f o X via off-grid
// interpolation, label gradients, and chord-arc diagnostics.

#include <cmath>
#include <string>
#include <vector>

#include "lagfix/errors.hpp"
#include "lagfix/grid.hpp"

namespace lagfix {

// X(a) = a + chi(a) with periodic displacement chi. Guaranteed invertible
// when sup |grad chi| < 1.
struct FlowMap {
    Field chi;  // rank 1
    InterpKind interp = InterpKind::Spline;

    FlowMap() = default;
    explicit FlowMap(Field chi_, InterpKind k = InterpKind::Spline) : chi(std::move(chi_)), interp(k) {
        if (chi.rank() != 1) throw std::invalid_argument("FlowMap: chi must be rank 1");
    }

    const GridSpec& grid() const { return chi.grid(); }
    bool is_identity() const { return max_abs(chi) == 0.0; }
};

inline FlowMap identity_map(const GridSpec& g, InterpKind k = InterpKind::Spline) {
    return FlowMap(Field(g, 1), k);
}

// Pointwise spectral norm (largest singular value) of a rank-2 field,
// maximized over the grid.
inline double max_spectral_norm(const Field& A) {
    if (A.rank() != 2) throw std::invalid_argument("max_spectral_norm: rank-2 field required");
    const int d = A.grid().d;
    const std::size_t npts = A.npoints();
    double worst = 0.0;
    if (d == 2) {
        const auto& a = A.comp(0, 0);
        const auto& b = A.comp(0, 1);
        const auto& c = A.comp(1, 0);
        const auto& e = A.comp(1, 1);
        for (std::size_t q = 0; q < npts; ++q) {
            const double fro2 = a[q] * a[q] + b[q] * b[q] + c[q] * c[q] + e[q] * e[q];
            const double det = a[q] * e[q] - b[q] * c[q];
            const double disc = std::max(0.0, fro2 * fro2 - 4.0 * det * det);
            const double s2 = 0.5 * (fro2 + std::sqrt(disc));
            worst = std::max(worst, s2);
        }
        return std::sqrt(worst);
    }
    // d == 3: largest eigenvalue of A^T A by a few power iterations per point
    for (std::size_t q = 0; q < npts; ++q) {
        double m[3][3];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) m[i][j] = A.comp(i, j)[q];
        double v[3] = {1.0, 0.7, 0.4};
        double lam = 0.0;
        for (int it = 0; it < 12; ++it) {
            double av[3] = {0, 0, 0}, atav[3] = {0, 0, 0};
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) av[i] += m[i][j] * v[j];
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) atav[j] += m[i][j] * av[i];
            double nn = std::sqrt(atav[0] * atav[0] + atav[1] * atav[1] + atav[2] * atav[2]);
            if (nn == 0) break;
            lam = nn;
            for (int i = 0; i < 3; ++i) v[i] = atav[i] / nn;
        }
        worst = std::max(worst, lam);  // lam approximates sigma_max^2
    }
    return std::sqrt(worst);
}

// grad_a X = I + grad chi (spectral differentiation)
inline Field grad_label(const FlowMap& X) {
    Field g = gradient(X.chi);
    const int d = X.grid().d;
    for (int i = 0; i < d; ++i) {
        auto& c = g.comp(i, i);
        for (auto& v : c) v += 1.0;
    }
    return g;
}

// f o X: f evaluated at the displaced grid points
inline Field compose(const Field& f, const FlowMap& X) {
    if (!(f.grid() == X.grid())) throw std::invalid_argument("compose: grid mismatch");
    if (X.is_identity()) return f;  // exact on the nose
    const GridSpec& g = f.grid();
    const int d = g.d;
    const std::size_t npts = g.npoints();
    std::vector<double> pts(npts * d);
    for (std::size_t q = 0; q < npts; ++q) {
        auto x = g.point(q);
        for (int a = 0; a < d; ++a) pts[q * d + a] = x[a] + X.chi.comp(a)[q];
    }
    Interpolator itp(f, X.interp);
    std::vector<double> vals = itp.eval(pts);
    Field out(g, f.rank(), f.symmetric());
    for (int c = 0; c < f.ncomp(); ++c) {
        auto& oc = out.comp(c);
        for (std::size_t q = 0; q < npts; ++q) oc[q] = vals[q * f.ncomp() + c];
    }
    return out;
}

struct InvertOptions {
    double tol = 1e-10;
    int max_iter = 50;
};

// A = X^{-1}, computed per grid point by the fixed-point iteration
// a <- x - chi(a) with a Newton fallback for stragglers.
inline FlowMap invert_map(const FlowMap& X, const InvertOptions& opt = {}) {
    const GridSpec& g = X.grid();
    const int d = g.d;
    const std::size_t npts = g.npoints();
    if (X.is_identity()) return identity_map(g, X.interp);
    X.chi.require_finite("invert_map");

    Interpolator chi_itp(X.chi, X.interp);
    std::vector<double> a(npts * d);
    for (std::size_t q = 0; q < npts; ++q) {
        auto x = g.point(q);
        for (int c = 0; c < d; ++c) a[q * d + c] = x[c];
    }
    // warm start a = x - chi(x)
    {
        std::vector<double> chix = chi_itp.eval(a);
        for (std::size_t q = 0; q < npts; ++q) {
            auto x = g.point(q);
            for (int c = 0; c < d; ++c) a[q * d + c] = x[c] - chix[q * d + c];
        }
    }

    double move = 0.0;
    for (int it = 0; it < opt.max_iter; ++it) {
        std::vector<double> chia = chi_itp.eval(a);
        move = 0.0;
        for (std::size_t q = 0; q < npts; ++q) {
            auto x = g.point(q);
            for (int c = 0; c < d; ++c) {
                const double next = x[c] - chia[q * d + c];
                move = std::max(move, std::abs(next - a[q * d + c]));
                a[q * d + c] = next;
            }
        }
        if (move < 0.25 * opt.tol) break;
    }

    // residual |X(a) - x| per point; Newton on the points that missed
    std::vector<double> chia = chi_itp.eval(a);
    std::vector<std::size_t> bad;
    for (std::size_t q = 0; q < npts; ++q) {
        auto x = g.point(q);
        double r2 = 0.0;
        for (int c = 0; c < d; ++c) {
            const double r = min_image(a[q * d + c] + chia[q * d + c] - x[c], g.L);
            r2 += r * r;
        }
        if (std::sqrt(r2) > opt.tol) bad.push_back(q);
    }
    if (!bad.empty()) {
        Field gradchi = gradient(X.chi);
        Interpolator grad_itp(gradchi, X.interp);
        for (int newton = 0; newton < 8 && !bad.empty(); ++newton) {
            std::vector<double> pts(bad.size() * d);
            for (std::size_t b = 0; b < bad.size(); ++b)
                for (int c = 0; c < d; ++c) pts[b * d + c] = a[bad[b] * d + c];
            std::vector<double> chiv = chi_itp.eval(pts);
            std::vector<double> gv = grad_itp.eval(pts);
            std::vector<std::size_t> still;
            for (std::size_t b = 0; b < bad.size(); ++b) {
                const std::size_t q = bad[b];
                auto x = g.point(q);
                double res[3] = {0, 0, 0}, J[3][3] = {{0}};
                double r2 = 0.0;
                for (int i = 0; i < d; ++i) {
                    res[i] = min_image(pts[b * d + i] + chiv[b * d + i] - x[i], g.L);
                    r2 += res[i] * res[i];
                    for (int j = 0; j < d; ++j) J[i][j] = (i == j ? 1.0 : 0.0) + gv[b * d * d + i * d + j];
                }
                if (std::sqrt(r2) <= opt.tol) continue;
                double step[3] = {0, 0, 0};
                if (d == 2) {
                    const double det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
                    if (std::abs(det) < 1e-14) {
                        still.push_back(q);
                        continue;
                    }
                    step[0] = (J[1][1] * res[0] - J[0][1] * res[1]) / det;
                    step[1] = (-J[1][0] * res[0] + J[0][0] * res[1]) / det;
                } else {
                    const double det = J[0][0] * (J[1][1] * J[2][2] - J[1][2] * J[2][1]) -
                                       J[0][1] * (J[1][0] * J[2][2] - J[1][2] * J[2][0]) +
                                       J[0][2] * (J[1][0] * J[2][1] - J[1][1] * J[2][0]);
                    if (std::abs(det) < 1e-14) {
                        still.push_back(q);
                        continue;
                    }
                    const double inv[3][3] = {
                        {(J[1][1] * J[2][2] - J[1][2] * J[2][1]) / det, (J[0][2] * J[2][1] - J[0][1] * J[2][2]) / det,
                         (J[0][1] * J[1][2] - J[0][2] * J[1][1]) / det},
                        {(J[1][2] * J[2][0] - J[1][0] * J[2][2]) / det, (J[0][0] * J[2][2] - J[0][2] * J[2][0]) / det,
                         (J[0][2] * J[1][0] - J[0][0] * J[1][2]) / det},
                        {(J[1][0] * J[2][1] - J[1][1] * J[2][0]) / det, (J[0][1] * J[2][0] - J[0][0] * J[2][1]) / det,
                         (J[0][0] * J[1][1] - J[0][1] * J[1][0]) / det}};
                    for (int i = 0; i < 3; ++i)
                        for (int j = 0; j < 3; ++j) step[i] += inv[i][j] * res[j];
                }
                for (int i = 0; i < d; ++i) a[q * d + i] -= step[i];
                still.push_back(q);
            }
            // re-check residuals of the stragglers next round
            std::vector<double> pts2(still.size() * d);
            for (std::size_t b = 0; b < still.size(); ++b)
                for (int c = 0; c < d; ++c) pts2[b * d + c] = a[still[b] * d + c];
            std::vector<double> chiv2 = chi_itp.eval(pts2);
            bad.clear();
            for (std::size_t b = 0; b < still.size(); ++b) {
                const std::size_t q = still[b];
                auto x = g.point(q);
                double r2 = 0.0;
                for (int c = 0; c < d; ++c) {
                    const double r = min_image(pts2[b * d + c] + chiv2[b * d + c] - x[c], g.L);
                    r2 += r * r;
                }
                if (std::sqrt(r2) > opt.tol) bad.push_back(q);
            }
        }
        if (!bad.empty())
            throw invertibility_error("invert_map: " + std::to_string(bad.size()) +
                                      " points failed to converge (map may not be invertible)");
    }

    Field alpha(g, 1);
    for (std::size_t q = 0; q < npts; ++q) {
        auto x = g.point(q);
        for (int c = 0; c < d; ++c) alpha.comp(c)[q] = min_image(a[q * d + c] - x[c], g.L);
    }
    return FlowMap(std::move(alpha), X.interp);
}

// ---------------------------------------------------------------------------
// chord-arc diagnostics

struct ChordArcReport {
    double min_ratio = 1.0;  // extremes of |a-b| / |X(a)-X(b)|
    double max_ratio = 1.0;
    double lambda = 1.0;
    bool pass = true;
};

// Samples pairs (a, a+o) over axis and diagonal directions at dyadic
// separations; ratios must lie in [1/lambda, lambda] up to the slack.
inline ChordArcReport chord_arc(const FlowMap& X, double lambda, double slack = 0.02) {
    if (lambda < 1.0) throw std::invalid_argument("chord_arc: lambda must be >= 1");
    const GridSpec& g = X.grid();
    const int d = g.d;
    const int n = g.n;
    const double h = g.h();

    std::vector<std::array<int, 3>> dirs;
    for (int a = 0; a < d; ++a) {
        std::array<int, 3> e{0, 0, 0};
        e[a] = 1;
        dirs.push_back(e);
    }
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
    }

    ChordArcReport rep;
    rep.lambda = lambda;
    double mn = 1.0, mx = 1.0;
    const std::size_t npts = g.npoints();
    for (const auto& e : dirs) {
        for (int s = 1; s <= n / 2; s *= 2) {
            double o[3] = {0, 0, 0};
            double onorm2 = 0.0;
            for (int c = 0; c < d; ++c) {
                o[c] = e[c] * s * h;
                onorm2 += o[c] * o[c];
            }
            const double onorm = std::sqrt(onorm2);
            for (std::size_t q = 0; q < npts; ++q) {
                auto j = g.unindex(q);
                std::array<int, 3> jb = j;
                for (int c = 0; c < d; ++c) jb[c] = ((j[c] + e[c] * s) % n + n) % n;
                const std::size_t qb = g.index(jb);
                double den2 = 0.0;
                for (int c = 0; c < d; ++c) {
                    const double dx = o[c] + X.chi.comp(c)[qb] - X.chi.comp(c)[q];
                    den2 += dx * dx;
                }
                const double ratio = onorm / std::sqrt(den2);
                mn = std::min(mn, ratio);
                mx = std::max(mx, ratio);
            }
        }
    }
    rep.min_ratio = mn;
    rep.max_ratio = mx;
    rep.pass = (mn >= (1.0 / lambda) / (1.0 + slack)) && (mx <= lambda * (1.0 + slack));
    return rep;
}

}  // namespace lagfix
