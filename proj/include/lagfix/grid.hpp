#pragma once

// Periodic grid substrate: fields of rank 0/1/2 on the torus [0,L)^d with
// spectral transforms, differentiation, dealiased products and off-grid
// interpolation (periodic cubic spline or trigonometric).

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "lagfix/fft.hpp"

namespace lagfix {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

struct GridSpec {
    int d = 2;          // spatial dimension, 2 or 3
    int n = 64;         // points per dimension (even, >= 8)
    double L = two_pi;  // box side length

    GridSpec() = default;
    GridSpec(int d_, int n_, double L_ = two_pi) : d(d_), n(n_), L(L_) { validate(); }

    void validate() const {
        if (d != 2 && d != 3) throw std::invalid_argument("GridSpec: d must be 2 or 3");
        if (n < 8 || n % 2 != 0) throw std::invalid_argument("GridSpec: n must be even and >= 8");
        if (!(L > 0)) throw std::invalid_argument("GridSpec: L must be positive");
    }

    std::size_t npoints() const {
        std::size_t m = 1;
        for (int a = 0; a < d; ++a) m *= static_cast<std::size_t>(n);
        return m;
    }
    double h() const { return L / n; }
    std::vector<int> dims() const { return std::vector<int>(static_cast<std::size_t>(d), n); }

    // row-major flat index
    std::size_t index(const std::array<int, 3>& j) const {
        std::size_t idx = 0;
        for (int a = 0; a < d; ++a) idx = idx * n + static_cast<std::size_t>(j[a]);
        return idx;
    }
    std::array<int, 3> unindex(std::size_t idx) const {
        std::array<int, 3> j{0, 0, 0};
        for (int a = d - 1; a >= 0; --a) {
            j[a] = static_cast<int>(idx % n);
            idx /= n;
        }
        return j;
    }
    std::array<double, 3> point(std::size_t idx) const {
        auto j = unindex(idx);
        std::array<double, 3> x{0, 0, 0};
        for (int a = 0; a < d; ++a) x[a] = j[a] * h();
        return x;
    }

    bool operator==(const GridSpec& o) const { return d == o.d && n == o.n && L == o.L; }
};

inline int ncomp_for_rank(int d, int rank) {
    switch (rank) {
        case 0: return 1;
        case 1: return d;
        case 2: return d * d;
        default: throw std::invalid_argument("rank must be 0, 1 or 2");
    }
}

// Real tensor field sampled at grid points; one flat array per component.
// Rank-2 components are stored row-major: comp(i,j) = i*d + j, with the
// convention (grad u)_{ij} = du_i/dx_j.
class Field {
  public:
    Field() = default;
    Field(const GridSpec& g, int rank, bool symmetric = false)
        : grid_(g), rank_(rank), symmetric_(symmetric && rank == 2),
          comp_(ncomp_for_rank(g.d, rank), std::vector<double>(g.npoints(), 0.0)) {}

    const GridSpec& grid() const { return grid_; }
    int rank() const { return rank_; }
    bool symmetric() const { return symmetric_; }
    int ncomp() const { return static_cast<int>(comp_.size()); }
    std::size_t npoints() const { return grid_.npoints(); }

    std::vector<double>& comp(int c) { return comp_[c]; }
    const std::vector<double>& comp(int c) const { return comp_[c]; }
    std::vector<double>& comp(int i, int j) { return comp_[i * grid_.d + j]; }
    const std::vector<double>& comp(int i, int j) const { return comp_[i * grid_.d + j]; }

    void set_symmetric(bool s) { symmetric_ = s && rank_ == 2; }

    // copies the strict upper triangle over the lower one, making the
    // symmetry invariant exact
    void symmetrize() {
        if (rank_ != 2) return;
        for (int i = 0; i < grid_.d; ++i)
            for (int j = i + 1; j < grid_.d; ++j) comp(j, i) = comp(i, j);
        symmetric_ = true;
    }

    bool finite() const {
        for (const auto& c : comp_)
            for (double v : c)
                if (!std::isfinite(v)) return false;
        return true;
    }

    void require_finite(const char* where) const {
        if (!finite()) throw std::invalid_argument(std::string(where) + ": non-finite field values");
    }

  private:
    GridSpec grid_;
    int rank_ = 0;
    bool symmetric_ = false;
    std::vector<std::vector<double>> comp_;
};

// Half-complex mirror of a Field (FFTW r2c layout, unnormalized).
struct SpectralField {
    GridSpec grid;
    int rank = 0;
    std::vector<std::vector<fft::Complex>> comp;

    std::size_t nmodes() const { return fft::spectral_size(grid.dims()); }
};

inline SpectralField to_spectral(const Field& f) {
    SpectralField s;
    s.grid = f.grid();
    s.rank = f.rank();
    s.comp.reserve(f.ncomp());
    for (int c = 0; c < f.ncomp(); ++c) s.comp.push_back(fft::forward(f.comp(c), f.grid().dims()));
    return s;
}

inline Field to_real(const SpectralField& s, bool symmetric = false) {
    Field f(s.grid, s.rank, symmetric);
    for (std::size_t c = 0; c < s.comp.size(); ++c)
        f.comp(static_cast<int>(c)) = fft::inverse(s.comp[c], s.grid.dims());
    return f;
}

// Visits every stored half-spectrum mode. Passes the flat index, the signed
// integer wavevector m (m_last in [0, n/2]), |k|^2 in physical units and a
// flag marking modes with any |m_a| = n/2 (Nyquist, sign-ambiguous).
template <typename F>
inline void for_each_mode(const GridSpec& g, F&& fn) {
    const int n = g.n;
    const int nlast = n / 2 + 1;
    const double kunit = two_pi / g.L;
    std::array<int, 3> m{0, 0, 0};
    if (g.d == 2) {
        std::size_t idx = 0;
        for (int i0 = 0; i0 < n; ++i0) {
            m[0] = (i0 <= n / 2) ? i0 : i0 - n;
            for (int i1 = 0; i1 < nlast; ++i1, ++idx) {
                m[1] = i1;
                const bool nyq = (std::abs(m[0]) == n / 2) || (i1 == n / 2);
                const double k2 = kunit * kunit * (double(m[0]) * m[0] + double(m[1]) * m[1]);
                fn(idx, m, k2, nyq);
            }
        }
    } else {
        std::size_t idx = 0;
        for (int i0 = 0; i0 < n; ++i0) {
            m[0] = (i0 <= n / 2) ? i0 : i0 - n;
            for (int i1 = 0; i1 < n; ++i1) {
                m[1] = (i1 <= n / 2) ? i1 : i1 - n;
                for (int i2 = 0; i2 < nlast; ++i2, ++idx) {
                    m[2] = i2;
                    const bool nyq = (std::abs(m[0]) == n / 2) || (std::abs(m[1]) == n / 2) || (i2 == n / 2);
                    const double k2 =
                        kunit * kunit * (double(m[0]) * m[0] + double(m[1]) * m[1] + double(m[2]) * m[2]);
                    fn(idx, m, k2, nyq);
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// field algebra

inline void check_same_shape(const Field& a, const Field& b, const char* where) {
    if (!(a.grid() == b.grid()) || a.rank() != b.rank())
        throw std::invalid_argument(std::string(where) + ": field shape mismatch");
}

inline Field operator+(const Field& a, const Field& b) {
    check_same_shape(a, b, "operator+");
    Field r(a);
    for (int c = 0; c < r.ncomp(); ++c) {
        auto& rc = r.comp(c);
        const auto& bc = b.comp(c);
        for (std::size_t i = 0; i < rc.size(); ++i) rc[i] += bc[i];
    }
    return r;
}

inline Field operator-(const Field& a, const Field& b) {
    check_same_shape(a, b, "operator-");
    Field r(a);
    for (int c = 0; c < r.ncomp(); ++c) {
        auto& rc = r.comp(c);
        const auto& bc = b.comp(c);
        for (std::size_t i = 0; i < rc.size(); ++i) rc[i] -= bc[i];
    }
    return r;
}

inline Field operator*(double s, const Field& a) {
    Field r(a);
    for (int c = 0; c < r.ncomp(); ++c)
        for (auto& v : r.comp(c)) v *= s;
    return r;
}

inline void axpy(double s, const Field& x, Field& y) {
    check_same_shape(x, y, "axpy");
    for (int c = 0; c < y.ncomp(); ++c) {
        auto& yc = y.comp(c);
        const auto& xc = x.comp(c);
        for (std::size_t i = 0; i < yc.size(); ++i) yc[i] += s * xc[i];
    }
}

inline double max_abs(const Field& f) {
    double m = 0.0;
    for (int c = 0; c < f.ncomp(); ++c)
        for (double v : f.comp(c)) m = std::max(m, std::abs(v));
    return m;
}

// ---------------------------------------------------------------------------
// spectral differentiation and dealiasing

inline Field spectral_derivative(const Field& f, int axis) {
    if (axis < 0 || axis >= f.grid().d) throw std::invalid_argument("spectral_derivative: bad axis");
    f.require_finite("spectral_derivative");
    const double kunit = two_pi / f.grid().L;
    SpectralField s = to_spectral(f);
    for (auto& comp : s.comp) {
        for_each_mode(f.grid(), [&](std::size_t idx, const std::array<int, 3>& m, double, bool nyq) {
            if (nyq) {
                comp[idx] = 0.0;  // derivative Nyquist mode zeroed
            } else {
                const double k = kunit * m[axis];
                comp[idx] *= fft::Complex(0.0, k);
            }
        });
    }
    return to_real(s, f.symmetric());
}

// (grad f)_{i j} = d f_i / d x_j; rank 0 -> rank 1, rank 1 -> rank 2.
inline Field gradient(const Field& f) {
    const int d = f.grid().d;
    if (f.rank() == 0) {
        Field g(f.grid(), 1);
        for (int j = 0; j < d; ++j) g.comp(j) = spectral_derivative(f, j).comp(0);
        return g;
    }
    if (f.rank() == 1) {
        Field g(f.grid(), 2);
        for (int j = 0; j < d; ++j) {
            Field dj = spectral_derivative(f, j);
            for (int i = 0; i < d; ++i) g.comp(i, j) = dj.comp(i);
        }
        return g;
    }
    throw std::invalid_argument("gradient: rank must be 0 or 1");
}

// (div v) for rank 1, (div sigma)_i = d_j sigma_{ij} for rank 2.
inline Field divergence(const Field& f) {
    const int d = f.grid().d;
    if (f.rank() == 1) {
        Field r(f.grid(), 0);
        for (int j = 0; j < d; ++j) {
            Field dj = spectral_derivative(f, j);
            auto& rc = r.comp(0);
            const auto& dc = dj.comp(j);
            for (std::size_t i = 0; i < rc.size(); ++i) rc[i] += dc[i];
        }
        return r;
    }
    if (f.rank() == 2) {
        Field r(f.grid(), 1);
        for (int j = 0; j < d; ++j) {
            Field dj = spectral_derivative(f, j);
            for (int i = 0; i < d; ++i) {
                auto& rc = r.comp(i);
                const auto& dc = dj.comp(i, j);
                for (std::size_t q = 0; q < rc.size(); ++q) rc[q] += dc[q];
            }
        }
        return r;
    }
    throw std::invalid_argument("divergence: rank must be 1 or 2");
}

// 2/3-rule truncation: zero all modes with any |m_a| > floor(n/3).
inline void dealias_spectral(SpectralField& s) {
    const int keep = s.grid.n / 3;
    for (auto& comp : s.comp) {
        for_each_mode(s.grid, [&](std::size_t idx, const std::array<int, 3>& m, double, bool) {
            for (int a = 0; a < s.grid.d; ++a) {
                if (std::abs(m[a]) > keep) {
                    comp[idx] = 0.0;
                    break;
                }
            }
        });
    }
}

inline Field dealias(const Field& f) {
    SpectralField s = to_spectral(f);
    dealias_spectral(s);
    return to_real(s, f.symmetric());
}

namespace detail {

// Dealiased pointwise contraction: truncate inputs, combine in real space,
// truncate the product.
template <typename Combine>
inline Field product_dealias(const Field& a, const Field& b, int out_rank, bool out_sym, Combine&& fn) {
    if (!(a.grid() == b.grid())) throw std::invalid_argument("product: grid mismatch");
    Field at = dealias(a);
    Field bt = dealias(b);
    Field r(a.grid(), out_rank, out_sym);
    fn(at, bt, r);
    return dealias(r);
}

}  // namespace detail

// u_i v_j (dealiased)
inline Field outer_product(const Field& u, const Field& v) {
    if (u.rank() != 1 || v.rank() != 1) throw std::invalid_argument("outer_product: rank-1 inputs required");
    const int d = u.grid().d;
    return detail::product_dealias(u, v, 2, false, [d](const Field& a, const Field& b, Field& r) {
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                auto& rc = r.comp(i, j);
                const auto& ac = a.comp(i);
                const auto& bc = b.comp(j);
                for (std::size_t q = 0; q < rc.size(); ++q) rc[q] = ac[q] * bc[q];
            }
    });
}

// (A x)_i = A_{ij} x_j (dealiased)
inline Field matvec(const Field& A, const Field& x) {
    if (A.rank() != 2 || x.rank() != 1) throw std::invalid_argument("matvec: rank mismatch");
    const int d = A.grid().d;
    return detail::product_dealias(A, x, 1, false, [d](const Field& a, const Field& b, Field& r) {
        for (int i = 0; i < d; ++i) {
            auto& rc = r.comp(i);
            for (int j = 0; j < d; ++j) {
                const auto& ac = a.comp(i, j);
                const auto& bc = b.comp(j);
                for (std::size_t q = 0; q < rc.size(); ++q) rc[q] += ac[q] * bc[q];
            }
        }
    });
}

// (A B)_{ij} = A_{il} B_{lj} (dealiased)
inline Field matmul(const Field& A, const Field& B) {
    if (A.rank() != 2 || B.rank() != 2) throw std::invalid_argument("matmul: rank-2 inputs required");
    const int d = A.grid().d;
    return detail::product_dealias(A, B, 2, false, [d](const Field& a, const Field& b, Field& r) {
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                auto& rc = r.comp(i, j);
                for (int l = 0; l < d; ++l) {
                    const auto& ac = a.comp(i, l);
                    const auto& bc = b.comp(l, j);
                    for (std::size_t q = 0; q < rc.size(); ++q) rc[q] += ac[q] * bc[q];
                }
            }
    });
}

// (eta . grad f): advective derivative, any rank of f (dealiased)
inline Field advect(const Field& eta, const Field& f) {
    if (eta.rank() != 1) throw std::invalid_argument("advect: eta must be rank 1");
    const int d = f.grid().d;
    Field etat = dealias(eta);
    Field r(f.grid(), f.rank(), f.symmetric());
    for (int a = 0; a < d; ++a) {
        Field da = dealias(spectral_derivative(f, a));
        const auto& ec = etat.comp(a);
        for (int c = 0; c < f.ncomp(); ++c) {
            auto& rc = r.comp(c);
            const auto& dc = da.comp(c);
            for (std::size_t q = 0; q < rc.size(); ++q) rc[q] += ec[q] * dc[q];
        }
    }
    return dealias(r);
}

// ---------------------------------------------------------------------------
// time grids and paths

struct TimeGrid {
    double T = 1.0;
    int M = 1;

    TimeGrid() = default;
    TimeGrid(double T_, int M_) : T(T_), M(M_) {
        if (!(T > 0) || M < 1) throw std::invalid_argument("TimeGrid: need T > 0 and M >= 1");
    }
    double dt() const { return T / M; }
    double node(int m) const { return T * m / M; }
    int nnodes() const { return M + 1; }

    bool operator==(const TimeGrid& o) const { return T == o.T && M == o.M; }
};

// Uniform-rank sequence of frames on a TimeGrid.
struct Path {
    TimeGrid time;
    std::vector<Field> frames;

    Path() = default;
    Path(const TimeGrid& tg, const Field& constant_frame)
        : time(tg), frames(static_cast<std::size_t>(tg.nnodes()), constant_frame) {}
    Path(const TimeGrid& tg, std::vector<Field> fr) : time(tg), frames(std::move(fr)) { validate(); }

    void validate() const {
        if (frames.size() != static_cast<std::size_t>(time.nnodes()))
            throw std::invalid_argument("Path: frames.size() must equal M+1");
        for (const auto& f : frames)
            if (!(f.grid() == frames[0].grid()) || f.rank() != frames[0].rank())
                throw std::invalid_argument("Path: frames must share grid and rank");
    }

    const GridSpec& grid() const { return frames.at(0).grid(); }
    int rank() const { return frames.at(0).rank(); }
};

// ---------------------------------------------------------------------------
// periodic helpers

inline double wrap_periodic(double x, double L) {
    double r = std::fmod(x, L);
    if (r < 0) r += L;
    return r;
}

// representative in (-L/2, L/2]
inline double min_image(double dx, double L) {
    double r = std::fmod(dx, L);
    if (r > 0.5 * L) r -= L;
    if (r <= -0.5 * L) r += L;
    return r;
}

inline double periodic_distance(const std::array<double, 3>& a, const std::array<double, 3>& b, int d,
                                double L) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) {
        double di = min_image(a[i] - b[i], L);
        s += di * di;
    }
    return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// off-grid interpolation

enum class InterpKind { Spline, Trig };

// Batch evaluator for one field at arbitrary points. Spline: periodic cubic
// B-spline with the prefilter applied as the Fourier multiplier
// 1 / prod_a (4 + 2 cos(2 pi m_a / n)) / 6 (exact interpolation at nodes,
// O(h^4) off-grid). Trig: exact evaluation of the resolved Fourier series.
class Interpolator {
  public:
    Interpolator(const Field& f, InterpKind kind) : grid_(f.grid()), kind_(kind), ncomp_(f.ncomp()) {
        f.require_finite("Interpolator");
        if (kind_ == InterpKind::Spline) {
            SpectralField s = to_spectral(f);
            const int n = grid_.n;
            std::vector<double> bsym(static_cast<std::size_t>(n));
            for (int m = 0; m < n; ++m) bsym[m] = (4.0 + 2.0 * std::cos(two_pi * m / n)) / 6.0;
            for (auto& comp : s.comp) {
                for_each_mode(grid_, [&](std::size_t idx, const std::array<int, 3>& m, double, bool) {
                    double b = 1.0;
                    for (int a = 0; a < grid_.d; ++a) b *= bsym[(m[a] + n) % n];
                    comp[idx] /= b;
                });
            }
            Field coef = to_real(s);
            coef_.reserve(ncomp_);
            for (int c = 0; c < ncomp_; ++c) coef_.push_back(std::move(coef.comp(c)));
        } else {
            spec_ = to_spectral(f);
        }
    }

    int ncomp() const { return ncomp_; }

    // points: npts x d, row-major; out: npts x ncomp, row-major
    std::vector<double> eval(const std::vector<double>& points) const {
        const int d = grid_.d;
        if (points.size() % d != 0) throw std::invalid_argument("Interpolator::eval: bad points size");
        const std::size_t npts = points.size() / d;
        std::vector<double> out(npts * ncomp_, 0.0);
        if (kind_ == InterpKind::Spline)
            eval_spline(points, npts, out);
        else
            eval_trig(points, npts, out);
        return out;
    }

  private:
    void eval_spline(const std::vector<double>& points, std::size_t npts, std::vector<double>& out) const {
        const int d = grid_.d;
        const int n = grid_.n;
        const double invh = n / grid_.L;
        std::array<std::array<double, 4>, 3> w{};
        std::array<std::array<int, 4>, 3> ix{};
        for (std::size_t p = 0; p < npts; ++p) {
            for (int a = 0; a < d; ++a) {
                double t = wrap_periodic(points[p * d + a], grid_.L) * invh;
                const int base = static_cast<int>(std::floor(t));
                // base == n can occur when wrap_periodic rounds up to L;
                // the index wrap below absorbs it (u is then 0).
                const double u = t - base;
                const double u2 = u * u, u3 = u2 * u;
                w[a][0] = (1.0 - 3.0 * u + 3.0 * u2 - u3) / 6.0;
                w[a][1] = (4.0 - 6.0 * u2 + 3.0 * u3) / 6.0;
                w[a][2] = (1.0 + 3.0 * u + 3.0 * u2 - 3.0 * u3) / 6.0;
                w[a][3] = u3 / 6.0;
                for (int s = 0; s < 4; ++s) {
                    int q = base + s - 1;
                    q %= n;
                    if (q < 0) q += n;
                    ix[a][s] = q;
                }
            }
            if (d == 2) {
                for (int c = 0; c < ncomp_; ++c) {
                    const auto& cf = coef_[c];
                    double acc = 0.0;
                    for (int s0 = 0; s0 < 4; ++s0) {
                        const std::size_t row = static_cast<std::size_t>(ix[0][s0]) * n;
                        double rowacc = 0.0;
                        for (int s1 = 0; s1 < 4; ++s1) rowacc += w[1][s1] * cf[row + ix[1][s1]];
                        acc += w[0][s0] * rowacc;
                    }
                    out[p * ncomp_ + c] = acc;
                }
            } else {
                for (int c = 0; c < ncomp_; ++c) {
                    const auto& cf = coef_[c];
                    double acc = 0.0;
                    for (int s0 = 0; s0 < 4; ++s0)
                        for (int s1 = 0; s1 < 4; ++s1) {
                            const std::size_t row =
                                (static_cast<std::size_t>(ix[0][s0]) * n + ix[1][s1]) * n;
                            double rowacc = 0.0;
                            for (int s2 = 0; s2 < 4; ++s2) rowacc += w[2][s2] * cf[row + ix[2][s2]];
                            acc += w[0][s0] * w[1][s1] * rowacc;
                        }
                    out[p * ncomp_ + c] = acc;
                }
            }
        }
    }

    void eval_trig(const std::vector<double>& points, std::size_t npts, std::vector<double>& out) const {
        const int d = grid_.d;
        const double kunit = two_pi / grid_.L;
        const double norm = 1.0 / static_cast<double>(grid_.npoints());
        for (std::size_t p = 0; p < npts; ++p) {
            std::array<double, 3> x{0, 0, 0};
            for (int a = 0; a < d; ++a) x[a] = points[p * d + a];
            for (int c = 0; c < ncomp_; ++c) {
                const auto& sc = spec_.comp[c];
                double acc = 0.0;
                for_each_mode(grid_, [&](std::size_t idx, const std::array<int, 3>& m, double, bool) {
                    double phase = 0.0;
                    for (int a = 0; a < d; ++a) phase += kunit * m[a] * x[a];
                    // stored half-spectrum: modes with 0 < m_last < n/2
                    // represent a conjugate pair
                    const bool self = (m[d - 1] == 0) || (m[d - 1] == grid_.n / 2);
                    const double mult = self ? 1.0 : 2.0;
                    acc += mult * (sc[idx].real() * std::cos(phase) - sc[idx].imag() * std::sin(phase));
                });
                out[p * ncomp_ + c] = acc * norm;
            }
        }
    }

    GridSpec grid_;
    InterpKind kind_;
    int ncomp_ = 0;
    std::vector<std::vector<double>> coef_;
    SpectralField spec_;
};

inline std::vector<double> interpolate(const Field& f, const std::vector<double>& points,
                                       InterpKind kind = InterpKind::Spline) {
    return Interpolator(f, kind).eval(points);
}

}  // namespace lagfix
