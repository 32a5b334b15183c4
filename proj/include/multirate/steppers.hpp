#pragma once

// Base one-step schemes for a single subsystem whose coupling partner is
// supplied as a frozen waveform, plus the Newton machinery needed for the
// implicit scheme and algebraic constraints. Stepping is a pure function
// of its arguments; schemes hold no mutable state.

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>

#include "multirate/core.hpp"
#include "multirate/waveform.hpp"

namespace multirate {

struct NewtonConfig {
    double abs_tol = 1e-10;
    int max_iters = 25;
    /// Base finite-difference increment; the per-component increment is
    /// fd_eps * (1 + |x_j|).
    double fd_eps = 1.4901161193847656e-08;  // sqrt(machine epsilon)
};

/// Damped Newton iteration on R(x) = 0 with forward-difference Jacobian and
/// a halving line search on residual increase. `t_context` only labels the
/// error on failure.
[[nodiscard]] inline Vec newton_solve(const std::function<Vec(const Vec&)>& residual, Vec x,
                                      const NewtonConfig& cfg, double t_context) {
    if (x.empty()) return x;
    Vec r = residual(x);
    if (r.size() != x.size())
        throw std::invalid_argument("newton_solve: residual dimension mismatch");
    double rnorm = inf_norm(r);
    for (int it = 0; it < cfg.max_iters; ++it) {
        if (rnorm <= cfg.abs_tol) return x;
        const std::size_t n = x.size();
        Mat jac(n, n);
        for (std::size_t j = 0; j < n; ++j) {
            const double eps = cfg.fd_eps * (1.0 + std::abs(x[j]));
            Vec xp = x;
            xp[j] += eps;
            Vec rp = residual(xp);
            for (std::size_t i = 0; i < n; ++i) jac(i, j) = (rp[i] - r[i]) / eps;
        }
        Vec step;
        try {
            Vec rhs = r;
            for (double& v : rhs) v = -v;
            step = lu_solve(std::move(jac), rhs);
        } catch (const singular_matrix_error&) {
            throw numerical_error("Newton: singular Jacobian at t=" + std::to_string(t_context),
                                  t_context, rnorm);
        }
        double damping = 1.0;
        Vec x_try, r_try;
        double rnorm_try = std::numeric_limits<double>::infinity();
        for (int ls = 0; ls < 30; ++ls) {
            x_try = axpy(damping, step, x);
            r_try = residual(x_try);
            rnorm_try = inf_norm(r_try);
            if (rnorm_try < rnorm || rnorm_try <= cfg.abs_tol) break;
            damping *= 0.5;
        }
        x = std::move(x_try);
        r = std::move(r_try);
        rnorm = rnorm_try;
        if (!std::isfinite(rnorm))
            throw numerical_error("Newton: non-finite residual at t=" + std::to_string(t_context),
                                  t_context, rnorm);
    }
    if (rnorm <= cfg.abs_tol) return x;
    throw numerical_error("Newton: no convergence after " + std::to_string(cfg.max_iters) +
                              " iterations at t=" + std::to_string(t_context) +
                              " (residual " + std::to_string(rnorm) + ")",
                          t_context, rnorm);
}

/// Solve 0 = g(z) for the algebraic unknown; everything else is baked into
/// the closure.
[[nodiscard]] inline Vec solve_algebraic(const std::function<Vec(const Vec&)>& g, Vec z_guess,
                                         const NewtonConfig& cfg = {}, double t_context = 0.0) {
    return newton_solve(g, std::move(z_guess), cfg, t_context);
}

/// Subsystem right-hand side with the coupling partner already evaluated:
/// rhs(t, y, partner_values).
using OdeRhs = std::function<Vec(double t, const Vec& y, const Vec& partner)>;

/// One step of the named scheme on y' = rhs(t, y, partner(t)).
[[nodiscard]] inline Vec ode_step(const SchemeSpec& scheme, const OdeRhs& rhs, double t,
                                  const Vec& y, double h, const Waveform& partner,
                                  const NewtonConfig& cfg = {}) {
    if (!(h > 0.0)) throw validation_error("ode_step: step size must be > 0");
    switch (scheme.id) {
        case SchemeId::ExplicitEuler: {
            return axpy(h, rhs(t, y, partner.eval(t)), y);
        }
        case SchemeId::Heun: {
            const Vec k1 = rhs(t, y, partner.eval(t));
            const Vec k2 = rhs(t + h, axpy(h, k1, y), partner.eval(t + h));
            Vec out = y;
            for (std::size_t i = 0; i < out.size(); ++i) out[i] += 0.5 * h * (k1[i] + k2[i]);
            return out;
        }
        case SchemeId::Rk4: {
            const Vec wm = partner.eval(t + 0.5 * h);
            const Vec k1 = rhs(t, y, partner.eval(t));
            const Vec k2 = rhs(t + 0.5 * h, axpy(0.5 * h, k1, y), wm);
            const Vec k3 = rhs(t + 0.5 * h, axpy(0.5 * h, k2, y), wm);
            const Vec k4 = rhs(t + h, axpy(h, k3, y), partner.eval(t + h));
            Vec out = y;
            for (std::size_t i = 0; i < out.size(); ++i)
                out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            return out;
        }
        case SchemeId::ImplicitEuler: {
            const Vec w1 = partner.eval(t + h);
            auto res = [&](const Vec& x) {
                Vec f = rhs(t + h, x, w1);
                Vec r(x.size());
                for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] - y[i] - h * f[i];
                return r;
            };
            return newton_solve(res, y, cfg, t + h);
        }
    }
    throw std::logic_error("unreachable scheme id");
}

struct DenseStepResult {
    Vec y;
    Waveform dense;
};

/// One step plus the scheme's continuous extension over [t, t+h]:
/// linear for the Euler schemes, cubic Hermite on endpoint values and
/// slopes for Heun (order 2) and RK4 (order 3).
[[nodiscard]] inline DenseStepResult ode_step_dense(const SchemeSpec& scheme, const OdeRhs& rhs,
                                                    double t, const Vec& y, double h,
                                                    const Waveform& partner,
                                                    const NewtonConfig& cfg = {}) {
    Vec y1 = ode_step(scheme, rhs, t, y, h, partner, cfg);
    switch (scheme.id) {
        case SchemeId::ExplicitEuler:
        case SchemeId::ImplicitEuler:
            return {y1, Waveform::node_interp({t, t + h}, {y, y1}, 1, t, t + h)};
        case SchemeId::Heun:
        case SchemeId::Rk4: {
            Vec f0 = rhs(t, y, partner.eval(t));
            Vec f1 = rhs(t + h, y1, partner.eval(t + h));
            Waveform dense = Waveform::hermite(t, t + h, y, y1, std::move(f0), std::move(f1),
                                               scheme.dense_output_order);
            return {std::move(y1), std::move(dense)};
        }
    }
    throw std::logic_error("unreachable scheme id");
}

/// Coupled subsystem functions for the DAE path; the partner channels are
/// passed as already-evaluated vectors.
using SubsystemFn =
    std::function<Vec(double t, const Vec& y, const Vec& z, const Vec& y_other, const Vec& z_other)>;

/// One implicit Euler step of the semi-explicit subsystem
///   y1 = y + h f(t+h, y1, z1, partner(t+h)),  0 = g(t+h, y1, z1, partner(t+h)),
/// solved by Newton on the stacked unknown (y1, z1).
[[nodiscard]] inline std::pair<Vec, Vec> implicit_euler_dae_step(
    const SubsystemFn& f, const SubsystemFn& g, double t, const Vec& y, const Vec& z, double h,
    const Waveform& partner_y, const Waveform& partner_z, const NewtonConfig& cfg = {}) {
    if (!(h > 0.0)) throw validation_error("implicit_euler_dae_step: step size must be > 0");
    const double t1 = t + h;
    const Vec py = partner_y.eval(t1);
    const Vec pz = partner_z.dim() > 0 ? partner_z.eval(t1) : Vec{};
    const std::size_t ny = y.size(), nz = z.size();
    auto res = [&](const Vec& u) {
        Vec uy(u.begin(), u.begin() + static_cast<std::ptrdiff_t>(ny));
        Vec uz(u.begin() + static_cast<std::ptrdiff_t>(ny), u.end());
        Vec fv = f(t1, uy, uz, py, pz);
        Vec r(ny + nz);
        for (std::size_t i = 0; i < ny; ++i) r[i] = uy[i] - y[i] - h * fv[i];
        if (nz > 0) {
            Vec gv = g(t1, uy, uz, py, pz);
            for (std::size_t i = 0; i < nz; ++i) r[ny + i] = gv[i];
        }
        return r;
    };
    Vec u0(ny + nz);
    std::copy(y.begin(), y.end(), u0.begin());
    std::copy(z.begin(), z.end(), u0.begin() + static_cast<std::ptrdiff_t>(ny));
    Vec u = newton_solve(res, std::move(u0), cfg, t1);
    Vec y1(u.begin(), u.begin() + static_cast<std::ptrdiff_t>(ny));
    Vec z1(u.begin() + static_cast<std::ptrdiff_t>(ny), u.end());
    return {std::move(y1), std::move(z1)};
}

}  // namespace multirate
