#pragma once

// Constitutive catalogue F(g, tau) with exact linearizations, the map from
// the advected state to the momentum-equation stress, and the pointwise RK4
// integrator for the Lagrangian stress ODE d tau/dt = F(g, tau).

#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "lagfix/errors.hpp"
#include "lagfix/grid.hpp"

namespace lagfix {

enum class ModelKind { OldroydB, MHD, Custom };

// Pointwise evaluators operate on component arrays: g is the d x d velocity
// gradient (row-major, g[i*d+j] = d u_i / d x_j), the state tau has
// state_ncomp entries (d x d for Oldroyd-B, d for MHD).
struct ModelF {
    ModelKind kind = ModelKind::OldroydB;
    int d = 2;
    int state_rank = 2;
    bool state_symmetric = true;

    std::function<void(int d, const double* g, const double* tau, double* out)> F;
    std::function<void(int d, const double* g, const double* tau, const double* dg, const double* dtau,
                       double* out)>
        DF;  // D1F(g,tau) dg + D2F(g,tau) dtau

    // Momentum stress: the rank-2 field driving H div(.) in the velocity
    // equation (sigma itself for Oldroyd-B, b (x) b for MHD), plus its
    // derivative along a state direction.
    std::function<Field(const Field& state)> stress;
    std::function<Field(const Field& state, const Field& dstate)> stress_derivative;

    int state_ncomp() const { return state_rank == 2 ? d * d : d; }
};

// F(g, tau) = g tau + tau g^T - tau + g + g^T
inline ModelF make_oldroyd_b(int d) {
    ModelF m;
    m.kind = ModelKind::OldroydB;
    m.d = d;
    m.state_rank = 2;
    m.state_symmetric = true;
    m.F = [](int d_, const double* g, const double* tau, double* out) {
        for (int i = 0; i < d_; ++i)
            for (int j = 0; j < d_; ++j) {
                double acc = -tau[i * d_ + j] + g[i * d_ + j] + g[j * d_ + i];
                for (int l = 0; l < d_; ++l)
                    acc += g[i * d_ + l] * tau[l * d_ + j] + tau[i * d_ + l] * g[j * d_ + l];
                out[i * d_ + j] = acc;
            }
    };
    m.DF = [](int d_, const double* g, const double* tau, const double* dg, const double* dtau, double* out) {
        for (int i = 0; i < d_; ++i)
            for (int j = 0; j < d_; ++j) {
                double acc = -dtau[i * d_ + j] + dg[i * d_ + j] + dg[j * d_ + i];
                for (int l = 0; l < d_; ++l)
                    acc += dg[i * d_ + l] * tau[l * d_ + j] + tau[i * d_ + l] * dg[j * d_ + l] +
                           g[i * d_ + l] * dtau[l * d_ + j] + dtau[i * d_ + l] * g[j * d_ + l];
                out[i * d_ + j] = acc;
            }
    };
    m.stress = [](const Field& s) { return s; };
    m.stress_derivative = [](const Field&, const Field& ds) { return ds; };
    return m;
}

// F(g, b) = g . b; momentum stress b (x) b
inline ModelF make_mhd(int d) {
    ModelF m;
    m.kind = ModelKind::MHD;
    m.d = d;
    m.state_rank = 1;
    m.state_symmetric = false;
    m.F = [](int d_, const double* g, const double* b, double* out) {
        for (int i = 0; i < d_; ++i) {
            double acc = 0.0;
            for (int j = 0; j < d_; ++j) acc += g[i * d_ + j] * b[j];
            out[i] = acc;
        }
    };
    m.DF = [](int d_, const double* g, const double* b, const double* dg, const double* db, double* out) {
        for (int i = 0; i < d_; ++i) {
            double acc = 0.0;
            for (int j = 0; j < d_; ++j) acc += dg[i * d_ + j] * b[j] + g[i * d_ + j] * db[j];
            out[i] = acc;
        }
    };
    m.stress = [](const Field& b) { return outer_product(b, b); };
    m.stress_derivative = [](const Field& b, const Field& db) {
        return outer_product(db, b) + outer_product(b, db);
    };
    return m;
}

inline void check_model_shapes(const ModelF& m, const Field& g, const Field& tau) {
    if (g.rank() != 2) throw std::invalid_argument("model: g must be rank 2");
    if (tau.rank() != m.state_rank) throw std::invalid_argument("model: state rank mismatch");
    if (g.grid().d != m.d || tau.grid().d != m.d) throw std::invalid_argument("model: dimension mismatch");
}

// Pointwise constitutive law applied over the whole grid. No dealiasing:
// this is the right-hand side of an independent ODE at each grid point.
inline Field eval_F(const ModelF& m, const Field& g, const Field& tau) {
    check_model_shapes(m, g, tau);
    const int nc = m.state_ncomp();
    Field out(tau.grid(), m.state_rank, m.state_symmetric);
    const std::size_t npts = tau.npoints();
    std::vector<double> gv(m.d * m.d), tv(nc), ov(nc);
    for (std::size_t q = 0; q < npts; ++q) {
        for (int c = 0; c < m.d * m.d; ++c) gv[c] = g.comp(c)[q];
        for (int c = 0; c < nc; ++c) tv[c] = tau.comp(c)[q];
        m.F(m.d, gv.data(), tv.data(), ov.data());
        for (int c = 0; c < nc; ++c) out.comp(c)[q] = ov[c];
    }
    if (m.state_symmetric) out.symmetrize();
    return out;
}

// Exact linearization D1F dg + D2F dtau, pointwise.
inline Field eval_DF(const ModelF& m, const Field& g, const Field& tau, const Field& dg, const Field& dtau) {
    check_model_shapes(m, g, tau);
    check_model_shapes(m, dg, dtau);
    const int nc = m.state_ncomp();
    Field out(tau.grid(), m.state_rank, m.state_symmetric);
    const std::size_t npts = tau.npoints();
    std::vector<double> gv(m.d * m.d), tv(nc), dgv(m.d * m.d), dtv(nc), ov(nc);
    for (std::size_t q = 0; q < npts; ++q) {
        for (int c = 0; c < m.d * m.d; ++c) {
            gv[c] = g.comp(c)[q];
            dgv[c] = dg.comp(c)[q];
        }
        for (int c = 0; c < nc; ++c) {
            tv[c] = tau.comp(c)[q];
            dtv[c] = dtau.comp(c)[q];
        }
        m.DF(m.d, gv.data(), tv.data(), dgv.data(), dtv.data(), ov.data());
        for (int c = 0; c < nc; ++c) out.comp(c)[q] = ov[c];
    }
    if (m.state_symmetric) out.symmetrize();
    return out;
}

// Classical RK4 on d tau/dt = F(g(t), tau), independently at every grid
// point, with g linearly interpolated in time between frames. Frames are
// returned at every node. Non-finite values abort with the failure time.
inline Path integrate_tau(const ModelF& m, const Path& g_path, const Field& tau0) {
    if (g_path.rank() != 2) throw std::invalid_argument("integrate_tau: g frames must be rank 2");
    check_model_shapes(m, g_path.frames[0], tau0);
    const TimeGrid& tg = g_path.time;
    const double dt = tg.dt();
    const int nc = m.state_ncomp();
    const std::size_t npts = tau0.npoints();

    Path out;
    out.time = tg;
    out.frames.reserve(tg.nnodes());
    Field cur = tau0;
    if (m.state_symmetric) cur.symmetrize();
    out.frames.push_back(cur);

    std::vector<double> ga(m.d * m.d), gh(m.d * m.d), gb(m.d * m.d);
    std::vector<double> y(nc), k1(nc), k2(nc), k3(nc), k4(nc), tmp(nc);

    for (int step = 0; step < tg.M; ++step) {
        const Field& gA = g_path.frames[step];
        const Field& gB = g_path.frames[step + 1];
        Field next(tau0.grid(), m.state_rank, m.state_symmetric);
        for (std::size_t q = 0; q < npts; ++q) {
            for (int c = 0; c < m.d * m.d; ++c) {
                ga[c] = gA.comp(c)[q];
                gb[c] = gB.comp(c)[q];
                gh[c] = 0.5 * (ga[c] + gb[c]);
            }
            for (int c = 0; c < nc; ++c) y[c] = cur.comp(c)[q];
            m.F(m.d, ga.data(), y.data(), k1.data());
            for (int c = 0; c < nc; ++c) tmp[c] = y[c] + 0.5 * dt * k1[c];
            m.F(m.d, gh.data(), tmp.data(), k2.data());
            for (int c = 0; c < nc; ++c) tmp[c] = y[c] + 0.5 * dt * k2[c];
            m.F(m.d, gh.data(), tmp.data(), k3.data());
            for (int c = 0; c < nc; ++c) tmp[c] = y[c] + dt * k3[c];
            m.F(m.d, gb.data(), tmp.data(), k4.data());
            for (int c = 0; c < nc; ++c)
                next.comp(c)[q] = y[c] + dt / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
        if (m.state_symmetric) next.symmetrize();
        if (!next.finite())
            throw blowup_error("integrate_tau: non-finite state at t = " + std::to_string(tg.node(step + 1)),
                               tg.node(step + 1));
        out.frames.push_back(next);
        cur = next;
    }
    return out;
}

}  // namespace lagfix
