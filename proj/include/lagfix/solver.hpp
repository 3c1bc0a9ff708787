#pragma once

// The Lagrangian fixed-point machinery: nonlinearities evaluated along a
// state (X, tau [, v]), the map S producing (X_new, tau_new [, v_new]),
// Picard iteration with measured product-norm distances, invariant-set
// membership, and the exact linearizations of the maps.

#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "lagfix/dynamics.hpp"
#include "lagfix/errors.hpp"
#include "lagfix/grid.hpp"
#include "lagfix/lagrangian.hpp"
#include "lagfix/norms.hpp"
#include "lagfix/operators.hpp"

namespace lagfix {

enum class Branch { Stokes, NavierStokes };

// X = id + chi per frame; chi(0) = 0 and tau(0) = sigma0 are required. The
// velocity tab v is carried on both branches (it is part of the state and
// the product norm only on Navier-Stokes).
struct LagrangianState {
    Path chi;  // rank 1 displacement frames
    Path tau;  // state frames, rank per model
    std::optional<Path> v;
};

struct SolverConfig {
    NormParams norms;
    TimeGrid time{0.1, 16};
    ModelF model = make_oldroyd_b(2);
    Branch branch = Branch::Stokes;
    double nu = 1.0;
    double gamma = -1.0;  // invariant-set radius; <= 0 resolves to twice the data size
    double tol_fp = 1e-8;
    int max_iter = 40;
    double delta = -1.0;  // NS product-norm weight; <= 0 resolves to 1/(4K)
    double grad_chi_bound = 0.5;
    InterpKind interp = InterpKind::Spline;
};

// ---------------------------------------------------------------------------
// state construction and membership

inline LagrangianState initial_state(const SolverConfig& cfg, const Field& u0, const Field& sigma0) {
    LagrangianState z;
    z.chi = Path(cfg.time, Field(u0.grid(), 1));
    z.tau = Path(cfg.time, sigma0);
    Path v;
    v.time = cfg.time;
    v.frames.reserve(cfg.time.nnodes());
    for (int m = 0; m <= cfg.time.M; ++m) v.frames.push_back(heat_semigroup(u0, cfg.time.node(m), cfg.nu));
    z.v = std::move(v);
    return z;
}

struct InvariantCheck {
    bool ok = true;
    int first_bad_frame = -1;
    double max_grad_chi = 0.0;
    double p1_norm = 0.0;  // Lip(0,T; C^{1+alpha,p}) x Lip(0,T; C^{alpha,p}) size of (X - id, tau)
    std::string reason;
};

// Membership in the invariant set: the pointwise surrogate
// sup |grad chi| <= bound on every frame, and, when gamma > 0, the
// Lip-path-norm radius ||(X - id, tau)||_{P1} <= gamma.
inline InvariantCheck in_invariant_set(const LagrangianState& z, const SolverConfig& cfg,
                                       double gamma = -1.0) {
    InvariantCheck r;
    for (std::size_t m = 0; m < z.chi.frames.size(); ++m) {
        const double s = max_spectral_norm(gradient(z.chi.frames[m]));
        r.max_grad_chi = std::max(r.max_grad_chi, s);
        if (s > cfg.grad_chi_bound && r.ok) {
            r.ok = false;
            r.first_bad_frame = static_cast<int>(m);
            r.reason = "sup |grad chi| = " + std::to_string(s) + " exceeds " +
                       std::to_string(cfg.grad_chi_bound) + " at frame " + std::to_string(m);
        }
    }
    if (gamma > 0) {
        NormParams lip = cfg.norms;
        lip.beta = 1.0;
        r.p1_norm = path_cbeta_1alpha_p(z.chi, lip) + path_cbeta_alpha_p(z.tau, lip);
        if (r.p1_norm > gamma && r.ok) {
            r.ok = false;
            r.first_bad_frame = 0;
            r.reason = "P1 norm " + std::to_string(r.p1_norm) + " exceeds gamma " + std::to_string(gamma);
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// nonlinearity evaluation along a state

namespace detail {

struct FrameData {
    std::vector<FlowMap> X, A;
    Path sigma_state;              // tau o A per frame (Eulerian state)
    Path stress;                   // momentum stress per frame (rank 2)
    std::optional<Path> u;         // NS: v o A per frame
    std::optional<Path> inertial;  // NS: u (x) u per frame
};

inline FrameData frame_data(const LagrangianState& z, const SolverConfig& cfg) {
    FrameData fd;
    const int nn = cfg.time.nnodes();
    fd.X.reserve(nn);
    fd.A.reserve(nn);
    fd.sigma_state.time = cfg.time;
    fd.stress.time = cfg.time;
    const bool ns = cfg.branch == Branch::NavierStokes;
    if (ns) {
        if (!z.v) throw std::invalid_argument("NavierStokes branch requires the velocity tab v");
        fd.u = Path{};
        fd.u->time = cfg.time;
        fd.inertial = Path{};
        fd.inertial->time = cfg.time;
    }
    for (int m = 0; m < nn; ++m) {
        fd.X.emplace_back(z.chi.frames[m], cfg.interp);
        fd.A.push_back(invert_map(fd.X.back()));
        Field sig = compose(z.tau.frames[m], fd.A.back());
        if (cfg.model.state_symmetric) sig.symmetrize();
        fd.stress.frames.push_back(cfg.model.stress(sig));
        fd.sigma_state.frames.push_back(std::move(sig));
        if (ns) {
            Field um = compose(z.v->frames[m], fd.A.back());
            fd.inertial->frames.push_back(outer_product(um, um));
            fd.u->frames.push_back(std::move(um));
        }
    }
    return fd;
}

}  // namespace detail

struct NonlinearityEval {
    std::vector<Field> velocity;    // curly-U (Stokes) / curly-V (NS) frames
    std::vector<Field> g;           // Lagrangian velocity gradient frames
    std::vector<Field> eulerian_u;  // heat(u0) + U(stress) [- U(u x u)] at nodes
    Path sigma_state;               // Eulerian state frames
};

inline NonlinearityEval evaluate_nonlinearity(const LagrangianState& z, const SolverConfig& cfg,
                                              const Field& u0) {
    detail::FrameData fd = detail::frame_data(z, cfg);
    const bool ns = cfg.branch == Branch::NavierStokes;
    std::vector<Field> U = duhamel_velocity_nodes(fd.stress, cfg.nu);
    std::vector<Field> G = duhamel_gradient_nodes(fd.stress, cfg.nu);
    std::vector<Field> Uw, Gw;
    if (ns) {
        Uw = duhamel_velocity_nodes(*fd.inertial, cfg.nu);
        Gw = duhamel_gradient_nodes(*fd.inertial, cfg.nu);
    }
    const Field grad_u0 = gradient(u0);
    NonlinearityEval ev;
    ev.sigma_state = fd.sigma_state;
    const int nn = cfg.time.nnodes();
    ev.velocity.reserve(nn);
    ev.g.reserve(nn);
    ev.eulerian_u.reserve(nn);
    for (int m = 0; m < nn; ++m) {
        const double t = cfg.time.node(m);
        Field eu = heat_semigroup(u0, t, cfg.nu) + U[m];
        Field eg = heat_semigroup(grad_u0, t, cfg.nu) + G[m];
        if (ns) {
            eu = eu - Uw[m];
            eg = eg - Gw[m];
        }
        ev.velocity.push_back(compose(eu, fd.X[m]));
        ev.g.push_back(compose(eg, fd.X[m]));
        ev.eulerian_u.push_back(std::move(eu));
    }
    return ev;
}

// curly-U(X, tau)(t) = L(u0) o X + U(tau o X^{-1}) o X (no inertial term)
inline Field cal_U(const LagrangianState& z, const SolverConfig& cfg, const Field& u0, double t) {
    SolverConfig stokes_view = cfg;
    stokes_view.branch = Branch::Stokes;
    detail::FrameData fd = detail::frame_data(z, stokes_view);
    Field eu = heat_semigroup(u0, t, cfg.nu) + duhamel_velocity(fd.stress, t, cfg.nu);
    FlowMap Xt(detail::path_frame_at(z.chi, t), cfg.interp);
    return compose(eu, Xt);
}

// g(a,t) = (grad u)(X(a,t), t), including the inertial term on the NS branch
inline Field lag_g(const LagrangianState& z, const SolverConfig& cfg, const Field& u0, double t) {
    detail::FrameData fd = detail::frame_data(z, cfg);
    Field eg = heat_semigroup(gradient(u0), t, cfg.nu) + duhamel_gradient(fd.stress, t, cfg.nu);
    if (cfg.branch == Branch::NavierStokes) eg = eg - duhamel_gradient(*fd.inertial, t, cfg.nu);
    FlowMap Xt(detail::path_frame_at(z.chi, t), cfg.interp);
    return compose(eg, Xt);
}

// curly-V(X, tau, v)(t) = curly-U(t) - U((v x v) o X^{-1})(t) o X
inline Field cal_V(const LagrangianState& z, const SolverConfig& cfg, const Field& u0, double t) {
    if (!z.v) throw std::invalid_argument("cal_V: state has no velocity tab");
    SolverConfig ns_view = cfg;
    ns_view.branch = Branch::NavierStokes;
    detail::FrameData fd = detail::frame_data(z, ns_view);
    Field eu = heat_semigroup(u0, t, cfg.nu) + duhamel_velocity(fd.stress, t, cfg.nu) -
               duhamel_velocity(*fd.inertial, t, cfg.nu);
    FlowMap Xt(detail::path_frame_at(z.chi, t), cfg.interp);
    return compose(eu, Xt);
}

// ---------------------------------------------------------------------------
// the fixed-point map S

namespace detail {

inline void check_surrogate(const Path& chi, double bound, const char* where) {
    for (std::size_t m = 0; m < chi.frames.size(); ++m) {
        const double s = max_spectral_norm(gradient(chi.frames[m]));
        if (s > bound)
            throw invariant_violation_error(std::string(where) + ": sup |grad chi| = " + std::to_string(s) +
                                                " > " + std::to_string(bound) + " at frame " +
                                                std::to_string(m),
                                            static_cast<int>(m));
    }
}

}  // namespace detail

// One application of the map S: X_new = id + int curly-U/V, tau_new from the
// stress ODE driven by the g frames, v_new = the curly-U/V frames.
inline LagrangianState apply_S(const LagrangianState& z, const SolverConfig& cfg, const Field& u0,
                               const Field& sigma0) {
    detail::check_surrogate(z.chi, cfg.grad_chi_bound, "apply_S input");
    NonlinearityEval ev = evaluate_nonlinearity(z, cfg, u0);

    LagrangianState out;
    out.chi.time = cfg.time;
    out.chi.frames.reserve(cfg.time.nnodes());
    Field acc(u0.grid(), 1);
    out.chi.frames.push_back(acc);
    const double dt = cfg.time.dt();
    for (int m = 0; m < cfg.time.M; ++m) {
        axpy(0.5 * dt, ev.velocity[m], acc);
        axpy(0.5 * dt, ev.velocity[m + 1], acc);
        out.chi.frames.push_back(acc);
    }

    Path g_path;
    g_path.time = cfg.time;
    g_path.frames = std::move(ev.g);
    out.tau = integrate_tau(cfg.model, g_path, sigma0);

    Path vnew;
    vnew.time = cfg.time;
    vnew.frames = std::move(ev.velocity);
    out.v = std::move(vnew);

    detail::check_surrogate(out.chi, cfg.grad_chi_bound, "apply_S output");
    return out;
}

// ---------------------------------------------------------------------------
// product-norm distance and Picard iteration

inline double state_distance(const LagrangianState& a, const LagrangianState& b, const NormParams& np,
                             double delta, bool include_v) {
    Path dchi, dtau;
    dchi.time = a.chi.time;
    dtau.time = a.tau.time;
    for (std::size_t m = 0; m < a.chi.frames.size(); ++m) {
        dchi.frames.push_back(a.chi.frames[m] - b.chi.frames[m]);
        dtau.frames.push_back(a.tau.frames[m] - b.tau.frames[m]);
    }
    double dist = path_cbeta_1alpha_p(dchi, np) + path_cbeta_alpha_p(dtau, np);
    if (include_v && a.v && b.v) {
        Path dv;
        dv.time = a.v->time;
        for (std::size_t m = 0; m < a.v->frames.size(); ++m)
            dv.frames.push_back(a.v->frames[m] - b.v->frames[m]);
        dist += delta * path_linf_1alpha_p(dv, np);
    }
    return dist;
}

// Fits the constant K in the velocity-tab bound by probing S at two states
// that differ in (X, tau) only; delta = 1/(4K).
inline double calibrate_delta(const SolverConfig& cfg, const Field& u0, const Field& sigma0) {
    LagrangianState za = initial_state(cfg, u0, sigma0);
    LagrangianState zb = za;
    const GridSpec& g = u0.grid();
    Field bump(g, 1);
    for (std::size_t q = 0; q < g.npoints(); ++q) {
        auto x = g.point(q);
        bump.comp(0)[q] = 0.01 * std::sin(two_pi / g.L * x[1]);
        bump.comp(1)[q] = 0.01 * std::sin(two_pi / g.L * x[0]);
    }
    Field tbump(g, cfg.model.state_rank, cfg.model.state_symmetric);
    for (std::size_t q = 0; q < g.npoints(); ++q) {
        auto x = g.point(q);
        tbump.comp(0)[q] = 0.01 * std::cos(two_pi / g.L * x[0]);
    }
    tbump.symmetrize();
    for (int m = 1; m <= cfg.time.M; ++m) {
        const double ramp = cfg.time.node(m) / cfg.time.T;
        axpy(ramp, bump, zb.chi.frames[m]);
        axpy(ramp, tbump, zb.tau.frames[m]);
    }
    LagrangianState Sa = apply_S(za, cfg, u0, sigma0);
    LagrangianState Sb = apply_S(zb, cfg, u0, sigma0);
    Path dv;
    dv.time = cfg.time;
    for (int m = 0; m <= cfg.time.M; ++m) dv.frames.push_back(Sa.v->frames[m] - Sb.v->frames[m]);
    const double dv_norm = path_linf_1alpha_p(dv, cfg.norms);
    const double base = state_distance(za, zb, cfg.norms, 0.0, false);
    const double K = std::max(dv_norm / std::max(base, 1e-300), 1e-6);
    return 1.0 / (4.0 * K);
}

struct PicardResult {
    LagrangianState state;
    std::vector<IterationRecord> history;
    std::vector<Field> eulerian_u;
    std::vector<Field> eulerian_sigma;
    double residual = 0.0;
    double delta_used = 0.0;
    double gamma_used = 0.0;
};

// Picard iteration z <- S(z) from z0 = (id, sigma0, L(u0)) until the
// measured product-norm distance of successive iterates drops below tol_fp.
inline PicardResult picard_solve(const SolverConfig& cfg, const Field& u0, const Field& sigma0) {
    if (u0.rank() != 1) throw std::invalid_argument("picard_solve: u0 must be rank 1");
    if (sigma0.rank() != cfg.model.state_rank)
        throw std::invalid_argument("picard_solve: sigma0 rank does not match the model");
    const double divu0 = max_divergence(u0);
    if (divu0 > 1e-10)
        throw std::invalid_argument("picard_solve: u0 is not divergence-free (max |div u0| = " +
                                    std::to_string(divu0) + ")");

    PicardResult res;
    const bool ns = cfg.branch == Branch::NavierStokes;
    res.delta_used = ns ? (cfg.delta > 0 ? cfg.delta : calibrate_delta(cfg, u0, sigma0)) : 0.0;
    res.gamma_used =
        cfg.gamma > 0 ? cfg.gamma : 2.0 * (norm_1alpha_p(u0, cfg.norms) + norm_alpha_p(sigma0, cfg.norms));

    LagrangianState z = initial_state(cfg, u0, sigma0);
    double prev_dist = -1.0;
    bool converged = false;
    for (int it = 1; it <= cfg.max_iter; ++it) {
        const auto t0 = std::chrono::steady_clock::now();
        LagrangianState znew = apply_S(z, cfg, u0, sigma0);
        const double dist = state_distance(znew, z, cfg.norms, res.delta_used, ns);
        const auto t1 = std::chrono::steady_clock::now();
        IterationRecord rec;
        rec.iter = it;
        rec.distance = dist;
        rec.ratio = prev_dist > 0 ? dist / prev_dist : 0.0;
        rec.seconds = std::chrono::duration<double>(t1 - t0).count();
        res.history.push_back(rec);
        z = std::move(znew);
        prev_dist = dist;
        if (dist < cfg.tol_fp) {
            converged = true;
            res.residual = dist;
            break;
        }
    }
    if (!converged)
        throw non_convergence_error(
            "picard_solve: no convergence after " + std::to_string(cfg.max_iter) +
                " iterations (T may be too large); last distance = " + std::to_string(prev_dist),
            res.history);

    // Eulerian reconstruction from the converged state
    NonlinearityEval ev = evaluate_nonlinearity(z, cfg, u0);
    res.eulerian_u = std::move(ev.eulerian_u);
    res.eulerian_sigma = std::move(ev.sigma_state.frames);
    res.state = std::move(z);
    return res;
}

// ---------------------------------------------------------------------------
// linearized maps (epsilon derivatives along a direction)

struct LinearizedMaps {
    Field dU;       // curly-U' at t (Lagrangian form)
    Field dg;       // g' at t (Lagrangian form)
    Field dT;       // curly-T' = D1F g' + D2F tau'
    Field grad_dU;  // grad_a of the branch velocity derivative, g'(grad X) + g(grad X')
    std::optional<Field> dV;  // NS: curly-V' at t
};

// direction = (X', tau' [, v']) packed as a LagrangianState; X'(0) = 0 is
// required so that perturbed states keep X(0) = id.
inline LinearizedMaps linearized_maps(const LagrangianState& z, const LagrangianState& dir,
                                      const SolverConfig& cfg, const Field& u0, const Field& du0,
                                      const Field& dsigma0, double t) {
    if (max_abs(dir.chi.frames[0]) != 0.0)
        throw std::invalid_argument("linearized_maps: direction must have X'(0) = 0");
    if (max_abs(dir.tau.frames[0] - dsigma0) > 1e-12)
        throw std::invalid_argument("linearized_maps: direction must have tau'(0) = sigma0'");
    const bool ns = cfg.branch == Branch::NavierStokes;
    detail::FrameData fd = detail::frame_data(z, cfg);
    const int nn = cfg.time.nnodes();

    // Eulerian forms of the direction
    Path eta, dsig;
    eta.time = dsig.time = cfg.time;
    for (int m = 0; m < nn; ++m) {
        eta.frames.push_back(compose(dir.chi.frames[m], fd.A[m]));
        dsig.frames.push_back(compose(dir.tau.frames[m], fd.A[m]));
    }

    // stress-level directions: DS[delta] and DS[eta . grad sigma]
    Path dS_dir, dS_adv;
    dS_dir.time = dS_adv.time = cfg.time;
    for (int m = 0; m < nn; ++m) {
        dS_dir.frames.push_back(cfg.model.stress_derivative(fd.sigma_state.frames[m], dsig.frames[m]));
        dS_adv.frames.push_back(cfg.model.stress_derivative(
            fd.sigma_state.frames[m], advect(eta.frames[m], fd.sigma_state.frames[m])));
    }

    const Field eta_t = detail::path_frame_at(eta, t);
    const Field grad_u0 = gradient(u0);
    FlowMap Xt(detail::path_frame_at(z.chi, t), cfg.interp);

    // curly-U' o X^{-1} = L(grad u0) eta + L(u0') + [eta.grad, U](S) + U(DS[delta])
    Field dU_eul = matvec(heat_semigroup(grad_u0, t, cfg.nu), eta_t) + heat_semigroup(du0, t, cfg.nu) +
                   advect(eta_t, duhamel_velocity(fd.stress, t, cfg.nu)) -
                   duhamel_velocity(dS_adv, t, cfg.nu) + duhamel_velocity(dS_dir, t, cfg.nu);

    // g' o X^{-1} = eta . grad L(grad u0) + L(grad u0') + [eta.grad, G](S) + G(DS[delta])
    Field dg_eul = advect(eta_t, heat_semigroup(grad_u0, t, cfg.nu)) +
                   heat_semigroup(gradient(du0), t, cfg.nu) +
                   advect(eta_t, duhamel_gradient(fd.stress, t, cfg.nu)) -
                   duhamel_gradient(dS_adv, t, cfg.nu) + duhamel_gradient(dS_dir, t, cfg.nu);

    std::optional<Field> dV_eul;
    if (ns) {
        if (!z.v || !dir.v) throw std::invalid_argument("linearized_maps: NS branch requires v and v'");
        // q = (v (x) v' + v' (x) v) o X^{-1}
        Path q;
        q.time = cfg.time;
        for (int m = 0; m < nn; ++m) {
            Field upm = compose(dir.v->frames[m], fd.A[m]);
            q.frames.push_back(outer_product(fd.u->frames[m], upm) + outer_product(upm, fd.u->frames[m]));
        }
        // [eta.grad, U](u x u)
        Path adv_w;
        adv_w.time = cfg.time;
        for (int m = 0; m < nn; ++m)
            adv_w.frames.push_back(advect(eta.frames[m], fd.inertial->frames[m]));
        Field commU_w = advect(eta_t, duhamel_velocity(*fd.inertial, t, cfg.nu)) -
                        duhamel_velocity(adv_w, t, cfg.nu);
        dV_eul = dU_eul - commU_w - duhamel_velocity(q, t, cfg.nu);

        // g' gains -[eta.grad, U](grad(u x u)) - U(grad q); the latter equals
        // G(q) mode by mode, the former needs the rank-3 slice treatment
        const int d = u0.grid().d;
        Field U3(u0.grid(), 2);
        for (int j = 0; j < d; ++j) {
            Path slice;
            slice.time = cfg.time;
            for (int m = 0; m < nn; ++m)
                slice.frames.push_back(
                    advect(eta.frames[m], spectral_derivative(fd.inertial->frames[m], j)));
            Field rj = duhamel_velocity(slice, t, cfg.nu);
            for (int i = 0; i < d; ++i) U3.comp(i, j) = rj.comp(i);
        }
        Field commU_gradw = advect(eta_t, duhamel_gradient(*fd.inertial, t, cfg.nu)) - U3;
        dg_eul = dg_eul - commU_gradw - duhamel_gradient(q, t, cfg.nu);
    }

    LinearizedMaps out{Field(), Field(), Field(), Field(), std::nullopt};
    out.dU = compose(dU_eul, Xt);
    out.dg = compose(dg_eul, Xt);
    if (ns) out.dV = compose(*dV_eul, Xt);

    // curly-T' = D1F(g,tau) g' + D2F(g,tau) tau'
    Field eg_t = heat_semigroup(grad_u0, t, cfg.nu) + duhamel_gradient(fd.stress, t, cfg.nu);
    if (ns) eg_t = eg_t - duhamel_gradient(*fd.inertial, t, cfg.nu);
    const Field g_t = compose(eg_t, Xt);
    const Field tau_t = detail::path_frame_at(z.tau, t);
    const Field dtau_t = detail::path_frame_at(dir.tau, t);
    out.dT = eval_DF(cfg.model, g_t, tau_t, out.dg, dtau_t);

    // grad_a of the velocity derivative: g'(grad X) + g(grad X')
    Field gradX = gradient(detail::path_frame_at(z.chi, t));
    for (int i = 0; i < u0.grid().d; ++i)
        for (auto& v : gradX.comp(i, i)) v += 1.0;
    Field gradXp = gradient(detail::path_frame_at(dir.chi, t));
    out.grad_dU = matmul(out.dg, gradX) + matmul(g_t, gradXp);
    return out;
}

}  // namespace lagfix
