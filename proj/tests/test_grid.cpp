#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "lagfix/grid.hpp"

using namespace lagfix;

namespace {

Field make_scalar(const GridSpec& g, const std::function<double(double, double)>& f) {
    Field out(g, 0);
    for (std::size_t q = 0; q < g.npoints(); ++q) {
        auto x = g.point(q);
        out.comp(0)[q] = f(x[0], x[1]);
    }
    return out;
}

}  // namespace

TEST_CASE("GridSpec validation") {
    CHECK_THROWS(GridSpec(4, 16));
    CHECK_THROWS(GridSpec(2, 15));
    CHECK_THROWS(GridSpec(2, 4));
    CHECK_THROWS(GridSpec(2, 16, -1.0));
    GridSpec g(2, 16);
    CHECK(g.npoints() == 256);
    CHECK(g.h() == Catch::Approx(two_pi / 16));
}

TEST_CASE("spectral round trip is exact to round-off") {
    GridSpec g(2, 32);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1, 1);
    Field f(g, 2);
    for (int c = 0; c < f.ncomp(); ++c)
        for (auto& v : f.comp(c)) v = u(rng);
    Field back = to_real(to_spectral(f));
    double scale = max_abs(f);
    CHECK(max_abs(back - f) / scale < 1e-12);
}

TEST_CASE("spectral_derivative on resolved modes") {
    GridSpec g(2, 32);
    SECTION("d/dx1 sin(x1) = cos(x1)") {
        Field f = make_scalar(g, [](double x, double) { return std::sin(x); });
        Field expected = make_scalar(g, [](double x, double) { return std::cos(x); });
        Field got = spectral_derivative(f, 0);
        CHECK(max_abs(got - expected) < 1e-12);
    }
    SECTION("constant differentiates to zero") {
        Field f = make_scalar(g, [](double, double) { return 3.25; });
        CHECK(max_abs(spectral_derivative(f, 0)) < 1e-13);
        CHECK(max_abs(spectral_derivative(f, 1)) < 1e-13);
    }
    SECTION("d/dx2 sin(3 x1) cos(2 x2) = -2 sin(3 x1) sin(2 x2)") {
        // oracle: symbolic differentiation of the product
        Field f = make_scalar(g, [](double x, double y) { return std::sin(3 * x) * std::cos(2 * y); });
        Field expected =
            make_scalar(g, [](double x, double y) { return -2.0 * std::sin(3 * x) * std::sin(2 * y); });
        CHECK(max_abs(spectral_derivative(f, 1) - expected) < 1e-12);
    }
    SECTION("rejects non-finite input") {
        Field f(g, 0);
        f.comp(0)[3] = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(spectral_derivative(f, 0), std::invalid_argument);
    }
    SECTION("exact linearity") {
        Field a = make_scalar(g, [](double x, double y) { return std::sin(x + 2 * y); });
        Field b = make_scalar(g, [](double x, double y) { return std::cos(3 * x) * std::sin(y); });
        Field lhs = spectral_derivative(a + 2.5 * b, 0);
        Field rhs = spectral_derivative(a, 0) + 2.5 * spectral_derivative(b, 0);
        CHECK(max_abs(lhs - rhs) < 1e-12);
    }
}

TEST_CASE("3d derivative smoke") {
    GridSpec g(3, 8);
    Field f(g, 0);
    for (std::size_t q = 0; q < g.npoints(); ++q) {
        auto x = g.point(q);
        f.comp(0)[q] = std::sin(x[2]) * std::cos(x[0]);
    }
    Field expected(g, 0);
    for (std::size_t q = 0; q < g.npoints(); ++q) {
        auto x = g.point(q);
        expected.comp(0)[q] = std::cos(x[2]) * std::cos(x[0]);
    }
    CHECK(max_abs(spectral_derivative(f, 2) - expected) < 1e-12);
}

TEST_CASE("interpolation") {
    GridSpec g(2, 32);
    SECTION("sin(x1) at (pi/2, 0) is 1") {
        Field f = make_scalar(g, [](double x, double) { return std::sin(x); });
        std::vector<double> pt{std::numbers::pi / 2, 0.0};
        CHECK(interpolate(f, pt, InterpKind::Trig)[0] == Catch::Approx(1.0).margin(1e-12));
        CHECK(interpolate(f, pt, InterpKind::Spline)[0] == Catch::Approx(1.0).margin(1e-4));
    }
    SECTION("grid points reproduce stored values") {
        Field f = make_scalar(g, [](double x, double y) { return std::sin(2 * x) + std::cos(y + 1) * 0.3; });
        std::vector<double> pts;
        std::vector<std::size_t> ids{0, 5, 77, 500, 1023};
        for (auto q : ids) {
            auto x = g.point(q);
            pts.push_back(x[0]);
            pts.push_back(x[1]);
        }
        auto vt = interpolate(f, pts, InterpKind::Trig);
        auto vs = interpolate(f, pts, InterpKind::Spline);
        for (std::size_t i = 0; i < ids.size(); ++i) {
            CHECK(std::abs(vt[i] - f.comp(0)[ids[i]]) < 1e-12);
            CHECK(std::abs(vs[i] - f.comp(0)[ids[i]]) < 1e-12);
        }
    }
    SECTION("trig interpolation exact on resolved modes off grid") {
        Field f = make_scalar(g, [](double x, double y) { return std::sin(4 * x + y); });
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> u(0, two_pi);
        std::vector<double> pts;
        for (int i = 0; i < 50; ++i) {
            pts.push_back(u(rng));
            pts.push_back(u(rng));
        }
        auto got = interpolate(f, pts, InterpKind::Trig);
        for (int i = 0; i < 50; ++i)
            CHECK(std::abs(got[i] - std::sin(4 * pts[2 * i] + pts[2 * i + 1])) < 1e-11);
    }
    SECTION("cubic spline error scales like h^4") {
        // closed-form evaluation oracle at random points, two resolutions
        std::mt19937_64 rng(13);
        std::uniform_real_distribution<double> u(0, two_pi);
        std::vector<double> pts;
        for (int i = 0; i < 100; ++i) {
            pts.push_back(u(rng));
            pts.push_back(u(rng));
        }
        double err[2];
        int nn[2] = {32, 64};
        for (int r = 0; r < 2; ++r) {
            GridSpec gr(2, nn[r]);
            Field f = make_scalar(gr, [](double x, double y) { return std::sin(4 * x + y); });
            auto got = interpolate(f, pts, InterpKind::Spline);
            double e = 0;
            for (int i = 0; i < 100; ++i)
                e = std::max(e, std::abs(got[i] - std::sin(4 * pts[2 * i] + pts[2 * i + 1])));
            err[r] = e;
        }
        CHECK(err[0] / err[1] > 10.0);  // ~16 for genuine 4th order
        GridSpec g64(2, 64);
        CHECK(err[1] < 5 * std::pow(4 * g64.h(), 4));
    }
}

TEST_CASE("dealiased products") {
    GridSpec g(2, 32);
    Field a(g, 1), b(g, 1);
    for (std::size_t q = 0; q < g.npoints(); ++q) {
        auto x = g.point(q);
        a.comp(0)[q] = std::sin(x[0]);
        a.comp(1)[q] = std::cos(x[1]);
        b.comp(0)[q] = std::cos(2 * x[1]);
        b.comp(1)[q] = std::sin(x[0] + x[1]);
    }
    SECTION("outer product matches pointwise product for resolved modes") {
        Field ab = outer_product(a, b);
        double worst = 0;
        for (std::size_t q = 0; q < g.npoints(); ++q)
            worst = std::max(worst, std::abs(ab.comp(0, 1)[q] - a.comp(0)[q] * b.comp(1)[q]));
        CHECK(worst < 1e-12);
    }
    SECTION("advect of constant field is zero") {
        Field c(g, 0);
        for (auto& v : c.comp(0)) v = 2.0;
        CHECK(max_abs(advect(a, c)) < 1e-12);
    }
}

TEST_CASE("TimeGrid and Path invariants") {
    CHECK_THROWS(TimeGrid(0.0, 4));
    CHECK_THROWS(TimeGrid(1.0, 0));
    TimeGrid tg(1.0, 4);
    CHECK(tg.node(0) == 0.0);
    CHECK(tg.node(4) == 1.0);
    GridSpec g(2, 8);
    Path p(tg, Field(g, 1));
    CHECK(p.frames.size() == 5);
    Path bad;
    bad.time = tg;
    bad.frames.assign(3, Field(g, 1));
    CHECK_THROWS(bad.validate());
}
