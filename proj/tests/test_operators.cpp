#include <catch_amalgamated.hpp>

#include <cmath>

#include "lagfix/operators.hpp"

using namespace lagfix;

namespace {

Field scalar_field(const GridSpec& g, const std::function<double(double, double)>& f) {
    Field out(g, 0);
    for (std::size_t q = 0; q < g.npoints(); ++q) {
        auto x = g.point(q);
        out.comp(0)[q] = f(x[0], x[1]);
    }
    return out;
}

Field vector_field(const GridSpec& g, const std::function<std::array<double, 2>(double, double)>& f) {
    Field out(g, 1);
    for (std::size_t q = 0; q < g.npoints(); ++q) {
        auto x = g.point(q);
        auto v = f(x[0], x[1]);
        out.comp(0)[q] = v[0];
        out.comp(1)[q] = v[1];
    }
    return out;
}

// sigma_{ij}(x) = A_{ij} sin(kvec . x)
Field single_mode_stress(const GridSpec& g, const std::array<double, 2>& kvec,
                         const std::array<std::array<double, 2>, 2>& A) {
    Field out(g, 2, true);
    for (std::size_t q = 0; q < g.npoints(); ++q) {
        auto x = g.point(q);
        const double s = std::sin(kvec[0] * x[0] + kvec[1] * x[1]);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) out.comp(i, j)[q] = A[i][j] * s;
    }
    return out;
}

// hand-derived closed form: U(A sin(k.x))(t) = (1 - e^{-|k|^2 t})/|k|^2 *
// (H c) cos(k.x) with c_i = A_{ij} k_j
struct SingleModeOracle {
    std::array<double, 2> kvec;
    std::array<double, 2> c_perp;
    double k2;

    SingleModeOracle(const std::array<double, 2>& k, const std::array<std::array<double, 2>, 2>& A) {
        kvec = k;
        k2 = k[0] * k[0] + k[1] * k[1];
        std::array<double, 2> c{A[0][0] * k[0] + A[0][1] * k[1], A[1][0] * k[0] + A[1][1] * k[1]};
        const double kc = (k[0] * c[0] + k[1] * c[1]) / k2;
        c_perp = {c[0] - k[0] * kc, c[1] - k[1] * kc};
    }

    Field velocity(const GridSpec& g, double t) const {
        const double factor = -std::expm1(-k2 * t) / k2;
        return vector_field(g, [&](double x, double y) {
            const double co = std::cos(kvec[0] * x + kvec[1] * y);
            return std::array<double, 2>{factor * c_perp[0] * co, factor * c_perp[1] * co};
        });
    }

    Field grad(const GridSpec& g, double t) const {
        const double factor = -std::expm1(-k2 * t) / k2;
        Field out(g, 2);
        for (std::size_t q = 0; q < g.npoints(); ++q) {
            auto x = g.point(q);
            const double si = std::sin(kvec[0] * x[0] + kvec[1] * x[1]);
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) out.comp(i, j)[q] = -factor * c_perp[i] * kvec[j] * si;
        }
        return out;
    }
};

const std::array<std::array<double, 2>, 2> kA{{{1.0, 0.5}, {0.5, -1.0}}};

}  // namespace

TEST_CASE("heat semigroup") {
    GridSpec g(2, 32);
    Field f = scalar_field(g, [](double x, double) { return std::sin(x); });
    SECTION("single mode decays by e^{-|k|^2 t}") {
        Field got = heat_semigroup(f, 0.5);
        Field expected = std::exp(-0.5) * f;
        CHECK(max_abs(got - expected) < 1e-13);
    }
    SECTION("t = 0 is the identity") { CHECK(max_abs(heat_semigroup(f, 0.0) - f) < 1e-12); }
    SECTION("constants are fixed (k = 0 mode)") {
        Field c = scalar_field(g, [](double, double) { return 1.5; });
        CHECK(max_abs(heat_semigroup(c, 2.0) - c) < 1e-13);
    }
    SECTION("negative time rejected") { CHECK_THROWS_AS(heat_semigroup(f, -0.1), std::invalid_argument); }
    SECTION("divergence-free input stays divergence-free") {
        Field v = vector_field(g, [](double, double y) { return std::array<double, 2>{std::sin(y), 0.0}; });
        CHECK(max_divergence(heat_semigroup(v, 1.0)) < 1e-12);
        Field expected = std::exp(-1.0) * v;
        CHECK(max_abs(heat_semigroup(v, 1.0) - expected) < 1e-13);
    }
}

TEST_CASE("riesz transform") {
    GridSpec g(2, 32);
    // R = (-Laplacian)^{-1/2} grad, i.e. symbol i k / |k|: R_1 sin(x1) =
    // (-Laplacian)^{-1/2} cos(x1) = cos(x1)
    SECTION("R_1 sin(x1) = cos(x1)") {
        Field f = scalar_field(g, [](double x, double) { return std::sin(x); });
        Field expected = scalar_field(g, [](double x, double) { return std::cos(x); });
        CHECK(max_abs(riesz(f, 0) - expected) < 1e-12);
    }
    SECTION("orthogonal mode maps to zero") {
        Field f = scalar_field(g, [](double, double y) { return std::sin(y); });
        CHECK(max_abs(riesz(f, 0)) < 1e-13);
    }
    SECTION("sum R_i^2 = -identity on mean-zero fields") {
        Field f = scalar_field(g, [](double x, double y) { return std::sin(2 * x) * std::cos(y) + std::cos(3 * y); });
        Field rr = riesz(riesz(f, 0), 0) + riesz(riesz(f, 1), 1);
        CHECK(max_abs(rr - (-1.0 * f)) < 1e-12);
    }
}

TEST_CASE("Leray projector") {
    GridSpec g(2, 32);
    SECTION("annihilates gradients") {
        Field p = scalar_field(g, [](double x, double y) { return std::sin(x) * std::cos(y); });
        Field gp = gradient(p);
        CHECK(max_abs(leray_project(gp)) < 1e-12);
    }
    SECTION("fixes divergence-free fields") {
        // v = (-d2 psi, d1 psi), psi = sin(x1) sin(x2)
        Field v = vector_field(g, [](double x, double y) {
            return std::array<double, 2>{-std::sin(x) * std::cos(y), std::cos(x) * std::sin(y)};
        });
        CHECK(max_abs(leray_project(v) - v) < 1e-12);
        CHECK(max_divergence(leray_project(v)) < 1e-12);
    }
    SECTION("zero maps to zero") {
        Field z(g, 1);
        CHECK(max_abs(leray_project(z)) == 0.0);
    }
    SECTION("idempotent") {
        Field v = vector_field(g, [](double x, double y) {
            return std::array<double, 2>{std::sin(x + y), std::cos(2 * x)};
        });
        Field once = leray_project(v);
        CHECK(max_abs(leray_project(once) - once) < 1e-12);
        CHECK(max_divergence(once) < 1e-12);
    }
    SECTION("multiplier form agrees with the direct form") {
        Field v = vector_field(g, [](double x, double y) {
            return std::array<double, 2>{std::sin(x + 2 * y), std::cos(x)};
        });
        Field via_mult = cz_apply(leray_multiplier(2), v);
        CHECK(max_abs(via_mult - leray_project(v)) < 1e-12);
    }
}

TEST_CASE("Duhamel velocity operator") {
    GridSpec g(2, 32);
    TimeGrid tg(0.5, 32);
    SECTION("zero stress gives zero velocity") {
        Path z(tg, Field(g, 2, true));
        CHECK(max_abs(duhamel_velocity(z, 0.3)) == 0.0);
    }
    SECTION("vanishes exactly at t = 0") {
        Path sig(tg, single_mode_stress(g, {1, 2}, kA));
        CHECK(max_abs(duhamel_velocity(sig, 0.0)) == 0.0);
    }
    SECTION("single-mode constant stress matches the closed form") {
        std::array<double, 2> k{1, 2};
        Path sig(tg, single_mode_stress(g, k, kA));
        SingleModeOracle oracle(k, kA);
        for (double t : {0.1, 0.25, 0.5}) {
            Field got = duhamel_velocity(sig, t);
            CHECK(max_abs(got - oracle.velocity(g, t)) < 1e-10);
            CHECK(max_divergence(got) < 1e-12);
        }
    }
    SECTION("node evaluation matches single-time evaluation") {
        std::array<double, 2> k{2, 1};
        Path sig(tg, single_mode_stress(g, k, kA));
        auto nodes = duhamel_velocity_nodes(sig);
        for (int m : {0, 7, 32}) {
            Field direct = duhamel_velocity(sig, tg.node(m));
            CHECK(max_abs(nodes[m] - direct) < 1e-12);
        }
    }
    SECTION("t beyond the grid rejected") {
        Path sig(tg, single_mode_stress(g, {1, 0}, kA));
        CHECK_THROWS_AS(duhamel_velocity(sig, 0.6), std::invalid_argument);
    }
    SECTION("linearity in the stress argument") {
        Path a(tg, single_mode_stress(g, {1, 2}, kA));
        Path b(tg, single_mode_stress(g, {3, 1}, kA));
        Path sum = a;
        for (std::size_t m = 0; m < sum.frames.size(); ++m)
            sum.frames[m] = sum.frames[m] + 2.0 * b.frames[m];
        Field lhs = duhamel_velocity(sum, 0.4);
        Field rhs = duhamel_velocity(a, 0.4) + 2.0 * duhamel_velocity(b, 0.4);
        CHECK(max_abs(lhs - rhs) < 1e-12);
    }
}

TEST_CASE("Duhamel gradient operator and steady closed form") {
    GridSpec g(2, 32);
    TimeGrid tg(0.5, 32);
    std::array<double, 2> k{1, 2};
    SECTION("zero stress gives zero") {
        Path z(tg, Field(g, 2, true));
        CHECK(max_abs(duhamel_gradient(z, 0.4)) == 0.0);
    }
    SECTION("single-mode constant stress matches the closed form") {
        Path sig(tg, single_mode_stress(g, k, kA));
        SingleModeOracle oracle(k, kA);
        for (double t : {0.1, 0.5}) CHECK(max_abs(duhamel_gradient(sig, t) - oracle.grad(g, t)) < 1e-10);
    }
    SECTION("steady form: t = 0 gives zero") {
        CHECK(max_abs(duhamel_gradient_steady(single_mode_stress(g, k, kA), 0.0)) == 0.0);
    }
    SECTION("steady form saturates to R H R sigma for large t") {
        Field sig = single_mode_stress(g, k, kA);
        Field sat = cz_apply(riesz_leray_riesz_multiplier(2), sig);
        CHECK(max_abs(duhamel_gradient_steady(sig, 50.0) - sat) < 1e-11);
    }
    SECTION("G on a constant-in-time path equals the steady closed form") {
        Field sig = single_mode_stress(g, k, kA);
        Path p(tg, sig);
        for (double t : {0.125, 0.5})
            CHECK(max_abs(duhamel_gradient(p, t) - duhamel_gradient_steady(sig, t)) < 1e-10);
    }
    SECTION("quadrature is second order on a time-modulated stress") {
        // sigma(t) = A sin(k.x) cos(w t); per-mode exact integral
        // int_0^t e^{-k2 (t-s)} cos(w s) ds =
        //   (k2 cos(w t) + w sin(w t) - k2 e^{-k2 t}) / (k2^2 + w^2)
        const double w = 9.0;
        const double k2 = k[0] * k[0] + k[1] * k[1];
        const double t = 0.5;
        SingleModeOracle oracle(k, kA);
        const double integral =
            (k2 * std::cos(w * t) + w * std::sin(w * t) - k2 * std::exp(-k2 * t)) / (k2 * k2 + w * w);
        Field exact = (integral * k2 / (-std::expm1(-k2 * t))) * oracle.velocity(g, t);
        double errs[2];
        for (int r = 0; r < 2; ++r) {
            TimeGrid tgr(0.5, r == 0 ? 32 : 64);
            Path sig;
            sig.time = tgr;
            for (int m = 0; m <= tgr.M; ++m)
                sig.frames.push_back(std::cos(w * tgr.node(m)) * single_mode_stress(g, k, kA));
            errs[r] = max_abs(duhamel_velocity(sig, t) - exact);
        }
        const double ratio = errs[0] / errs[1];
        CHECK(ratio > 3.5);
        CHECK(ratio < 4.5);
    }
}

TEST_CASE("general multipliers") {
    GridSpec g(2, 32);
    SECTION("identity symbol subtracts the mean") {
        Field f = scalar_field(g, [](double x, double y) { return 2.0 + std::sin(x) * std::cos(y); });
        Field expected = scalar_field(g, [](double x, double y) { return std::sin(x) * std::cos(y); });
        CHECK(max_abs(cz_apply(identity_multiplier(), f) - expected) < 1e-12);
    }
    SECTION("R1 R2 on sin(x1 + x2) gives -1/2 sin(x1 + x2)") {
        Field f = scalar_field(g, [](double x, double y) { return std::sin(x + y); });
        Field got = cz_apply(riesz_pair_multiplier(0, 1), f);
        CHECK(max_abs(got - (-0.5 * f)) < 1e-12);
    }
    SECTION("homogeneity check passes for built-ins and rejects garbage") {
        CHECK_NOTHROW(riesz_multiplier(0).check(2));
        CHECK_NOTHROW(leray_multiplier(2).check(2));
        CHECK_NOTHROW(riesz_leray_riesz_multiplier(2).check(2));
        Multiplier bad;
        bad.symbol = [](const std::array<double, 3>& khat, int, std::complex<double>* M) {
            static int call = 0;
            M[0] = std::complex<double>(khat[0] + 1e-3 * (call++), 0.0);
        };
        CHECK_THROWS_AS(bad.check(2), std::invalid_argument);
    }
}

TEST_CASE("steady commutator") {
    GridSpec g(2, 32);
    Multiplier K = riesz_pair_multiplier(0, 0);
    SECTION("constant advection field commutes") {
        Field eta(g, 1);
        for (auto& v : eta.comp(0)) v = 0.7;
        for (auto& v : eta.comp(1)) v = -0.2;
        Field f = scalar_field(g, [](double x, double y) { return std::sin(x) * std::cos(2 * y); });
        CHECK(max_abs(advection_commutator(eta, K, f)) < 1e-11);
    }
    SECTION("zero field commutes") {
        Field eta = vector_field(g, [](double x, double y) {
            return std::array<double, 2>{std::sin(y), std::cos(x)};
        });
        Field z(g, 0);
        CHECK(max_abs(advection_commutator(eta, K, z)) == 0.0);
    }
    SECTION("resolution refinement leaves the commutator unchanged") {
        // both terms evaluated at n and 2n agree on the coarse points
        double vals[2];
        int nn[2] = {32, 64};
        std::vector<double> coarse;
        for (int r = 0; r < 2; ++r) {
            GridSpec gr(2, nn[r]);
            Field eta = vector_field(gr, [](double, double y) {
                return std::array<double, 2>{std::sin(y), 0.0};
            });
            Field f = scalar_field(gr, [](double x, double) { return std::sin(x); });
            Field c = advection_commutator(eta, riesz_pair_multiplier(0, 0), f);
            if (r == 0) {
                coarse = c.comp(0);
                vals[0] = 0;
            } else {
                double worst = 0;
                for (int j0 = 0; j0 < 32; ++j0)
                    for (int j1 = 0; j1 < 32; ++j1)
                        worst = std::max(worst, std::abs(coarse[j0 * 32 + j1] -
                                                         c.comp(0)[(2 * j0) * 64 + 2 * j1]));
                vals[1] = worst;
            }
        }
        CHECK(vals[1] < 1e-3);
    }
}

TEST_CASE("space-time commutators") {
    GridSpec g(2, 32);
    TimeGrid tg(0.4, 16);
    Path sigma;
    sigma.time = tg;
    for (int m = 0; m <= tg.M; ++m)
        sigma.frames.push_back((1.0 + 0.5 * tg.node(m)) * single_mode_stress(g, {1, 2}, kA));
    SECTION("zero eta gives zero") {
        Path eta(tg, Field(g, 1));
        CHECK(max_abs(duhamel_velocity_commutator(eta, sigma, 0.4)) == 0.0);
        CHECK(max_abs(duhamel_gradient_commutator(eta, sigma, 0.4)) == 0.0);
    }
    SECTION("constant-in-space-and-time eta commutes") {
        Field ec(g, 1);
        for (auto& v : ec.comp(0)) v = 0.3;
        for (auto& v : ec.comp(1)) v = -0.8;
        Path eta(tg, ec);
        CHECK(max_abs(duhamel_velocity_commutator(eta, sigma, 0.4)) < 1e-11);
        CHECK(max_abs(duhamel_gradient_commutator(eta, sigma, 0.4)) < 1e-10);
    }
    SECTION("grid mismatch rejected") {
        Path eta(TimeGrid(0.4, 8), Field(g, 1));
        CHECK_THROWS_AS(duhamel_velocity_commutator(eta, sigma, 0.2), std::invalid_argument);
    }
    SECTION("refinement oracle: doubled resolution agrees") {
        auto run = [&](int n, int M) {
            GridSpec gr(2, n);
            TimeGrid tr(0.4, M);
            Path sig;
            sig.time = tr;
            for (int m = 0; m <= tr.M; ++m)
                sig.frames.push_back((1.0 + 0.5 * tr.node(m)) * single_mode_stress(gr, {1, 2}, kA));
            Path eta;
            eta.time = tr;
            for (int m = 0; m <= tr.M; ++m) {
                Field e = vector_field(gr, [&](double, double y) {
                    return std::array<double, 2>{0.3 * std::sin(y), 0.0};
                });
                eta.frames.push_back((1.0 + tr.node(m)) * e);
            }
            return duhamel_velocity_commutator(eta, sig, 0.4);
        };
        Field coarse = run(32, 16);
        Field fine = run(64, 32);
        double worst = 0;
        for (int j0 = 0; j0 < 32; ++j0)
            for (int j1 = 0; j1 < 32; ++j1)
                worst = std::max(worst, std::abs(coarse.comp(0)[j0 * 32 + j1] -
                                                 fine.comp(0)[(2 * j0) * 64 + 2 * j1]));
        CHECK(worst < 1e-3);
    }
}
