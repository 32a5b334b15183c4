#pragma once

// Built-in benchmark problems with oracle references. References are
// computed lazily and cached per queried time; every entry exposes a
// self_check() that compares two oracle resolutions differing by 2x and
// requires agreement to 1e-10 at t_end.

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "multirate/contraction.hpp"
#include "multirate/core.hpp"
#include "multirate/dae_multirate.hpp"
#include "multirate/ode_multirate.hpp"

namespace multirate {

struct RefState {
    Vec y_slow, y_fast, z_slow, z_fast;
};

namespace detail {

/// exp(A t) y0 for a real 2x2 matrix with distinct real eigenvalues.
inline Vec expm2_apply(double a00, double a01, double a10, double a11, double t, const Vec& y0) {
    const double tr = a00 + a11;
    const double det = a00 * a11 - a01 * a10;
    const double disc = tr * tr - 4.0 * det;
    if (!(disc > 0.0))
        throw numerical_error("expm2: eigenvalues not real and distinct", t, 0.0);
    const double sq = std::sqrt(disc);
    const double l1 = 0.5 * (tr + sq), l2 = 0.5 * (tr - sq);
    // eigenvectors as columns of V
    double v1x, v1y, v2x, v2y;
    if (std::abs(a01) > 1e-300) {
        v1x = a01; v1y = l1 - a00;
        v2x = a01; v2y = l2 - a00;
    } else if (std::abs(a10) > 1e-300) {
        v1x = l1 - a11; v1y = a10;
        v2x = l2 - a11; v2y = a10;
    } else {
        return {std::exp(a00 * t) * y0[0], std::exp(a11 * t) * y0[1]};
    }
    const double det_v = v1x * v2y - v2x * v1y;
    const double c1 = (y0[0] * v2y - v2x * y0[1]) / det_v;
    const double c2 = (v1x * y0[1] - y0[0] * v1y) / det_v;
    const double e1 = c1 * std::exp(l1 * t), e2 = c2 * std::exp(l2 * t);
    return {e1 * v1x + e2 * v2x, e1 * v1y + e2 * v2y};
}

/// Monolithic fixed-step RK4 on the stacked system; returns (y_slow|y_fast).
inline Vec rk4_monolithic(const PartitionedOde& p, double t_target, std::size_t n_steps) {
    const std::size_t ns = p.dim_slow;
    auto rhs = [&p, ns](double t, const Vec& w) {
        Vec ys(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(ns));
        Vec yf(w.begin() + static_cast<std::ptrdiff_t>(ns), w.end());
        Vec out = p.f_slow(t, ys, yf);
        Vec df = p.f_fast(t, ys, yf);
        out.insert(out.end(), df.begin(), df.end());
        return out;
    };
    Vec w = p.y_slow0;
    w.insert(w.end(), p.y_fast0.begin(), p.y_fast0.end());
    const double h = (t_target - p.t0) / static_cast<double>(n_steps);
    double t = p.t0;
    const std::size_t n = w.size();
    for (std::size_t s = 0; s < n_steps; ++s) {
        Vec k1 = rhs(t, w);
        Vec k2 = rhs(t + 0.5 * h, axpy(0.5 * h, k1, w));
        Vec k3 = rhs(t + 0.5 * h, axpy(0.5 * h, k2, w));
        Vec k4 = rhs(t + h, axpy(h, k3, w));
        for (std::size_t i = 0; i < n; ++i)
            w[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        t = p.t0 + (t_target - p.t0) * static_cast<double>(s + 1) / static_cast<double>(n_steps);
    }
    return w;
}

/// Monolithic implicit Euler on the stacked DAE; returns (y..., z...).
inline std::pair<Vec, Vec> ie_dae_monolithic(const PartitionedDae& p, double t_target,
                                             std::size_t n_steps) {
    PartitionedDae single = p;
    single.single_rate = true;
    single.t_end = t_target;
    MacroStepPlan plan;
    plan.H = (t_target - p.t0);
    plan.m = static_cast<int>(n_steps);
    plan.scheme_slow = SchemeSpec::make(SchemeId::ImplicitEuler);
    plan.scheme_fast = SchemeSpec::make(SchemeId::ImplicitEuler);
    IntegrateDaeOptions opts;
    opts.newton.abs_tol = 1e-13;  // solver noise must stay below the
    opts.newton.max_iters = 50;   // extrapolated reference accuracy
    Trajectory traj = integrate_dae(single, plan, opts);
    Vec y = traj.slow_states.back();
    y.insert(y.end(), traj.fast_states.back().begin(), traj.fast_states.back().end());
    Vec z = traj.z_slow_states.back();
    z.insert(z.end(), traj.z_fast_states.back().begin(), traj.z_fast_states.back().end());
    return {std::move(y), std::move(z)};
}

/// Richardson extrapolation of implicit Euler endpoint values over `levels`
/// step halvings starting from about h0. Returns the extrapolated state and
/// the difference to the one-level-coarser extrapolation (self-check).
struct RichardsonResult {
    Vec y, z;
    double self_diff = 0.0;
};

inline RichardsonResult richardson_ie(const PartitionedDae& p, double t, double h0, int levels) {
    // short horizons still resolve the fast transient: never fewer than 256
    // base steps
    const std::size_t n0 =
        std::max<std::size_t>(256, static_cast<std::size_t>(std::ceil((t - p.t0) / h0)));
    std::vector<Vec> table;  // stacked (y|z) per level, Richardson in place
    Vec prev_extrap;
    double self_diff = 0.0;
    for (int lev = 0; lev <= levels; ++lev) {
        auto [y, z] = ie_dae_monolithic(p, t, n0 << lev);
        Vec v = y;
        v.insert(v.end(), z.begin(), z.end());
        table.push_back(std::move(v));
        for (std::size_t j = table.size() - 1; j-- > 0;) {
            const double denom = std::pow(2.0, static_cast<double>(table.size() - 1 - j)) - 1.0;
            for (std::size_t i = 0; i < table[j].size(); ++i)
                table[j][i] = table[j + 1][i] + (table[j + 1][i] - table[j][i]) / denom;
        }
        if (lev == levels - 1) prev_extrap = table.front();
        if (lev == levels) {
            Vec diff = table.front();
            for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= prev_extrap[i];
            self_diff = inf_norm(diff);
        }
    }
    const std::size_t ny = p.dim_slow + p.dim_fast;
    RichardsonResult out;
    out.y = Vec(table.front().begin(), table.front().begin() + static_cast<std::ptrdiff_t>(ny));
    out.z = Vec(table.front().begin() + static_cast<std::ptrdiff_t>(ny), table.front().end());
    out.self_diff = self_diff;
    return out;
}

struct RefCache {
    std::mutex mu;
    std::map<double, RefState> values;
};

template <typename Compute>
std::function<RefState(double)> cached_reference(Compute compute) {
    auto cache = std::make_shared<RefCache>();
    return [cache, compute](double t) {
        {
            std::lock_guard<std::mutex> lock(cache->mu);
            auto it = cache->values.find(t);
            if (it != cache->values.end()) return it->second;
        }
        RefState v = compute(t);
        std::lock_guard<std::mutex> lock(cache->mu);
        cache->values[t] = v;
        return v;
    };
}

}  // namespace detail

struct CatalogEntry {
    std::string id;
    std::string description;
    std::optional<PartitionedOde> ode;
    std::optional<PartitionedDae> dae;
    std::function<RefState(double)> reference;
    std::function<void()> self_check;

    [[nodiscard]] bool is_dae() const { return dae.has_value(); }
    [[nodiscard]] double t0() const { return is_dae() ? dae->t0 : ode->t0; }
    [[nodiscard]] double t_end() const { return is_dae() ? dae->t_end : ode->t_end; }
};

/// LIN2 with adjustable coupling and fast rate:
///   y_S' = -y_S + c_sf y_F,   y_F' = c_fs y_S + fast_rate y_F.
[[nodiscard]] inline PartitionedOde make_lin2(double c_sf = 0.1, double c_fs = 0.2,
                                              double fast_rate = -10.0) {
    PartitionedOde p;
    p.dim_slow = 1;
    p.dim_fast = 1;
    p.f_slow = [c_sf](double, const Vec& ys, const Vec& yf) {
        return Vec{-ys[0] + c_sf * yf[0]};
    };
    p.f_fast = [c_fs, fast_rate](double, const Vec& ys, const Vec& yf) {
        return Vec{c_fs * ys[0] + fast_rate * yf[0]};
    };
    p.y_slow0 = {1.0};
    p.y_fast0 = {1.0};
    p.t0 = 0.0;
    p.t_end = 1.0;
    return p;
}

[[nodiscard]] inline PartitionedOde make_nonlin_osc() {
    PartitionedOde p;
    p.dim_slow = 1;
    p.dim_fast = 1;
    p.f_slow = [](double, const Vec& ys, const Vec& yf) {
        return Vec{-ys[0] + 0.1 * std::sin(yf[0])};
    };
    p.f_fast = [](double, const Vec& ys, const Vec& yf) {
        return Vec{-8.0 * yf[0] + 0.2 * ys[0] * ys[0]};
    };
    p.y_slow0 = {1.0};
    p.y_fast0 = {1.0};
    p.t0 = 0.0;
    p.t_end = 1.0;
    return p;
}

/// DAE-LIN(a, b, c, d):
///   y_S' = -y_S + z_F,        0 = z_S - a y_S - b z_F,
///   y_F' = -10 y_F + z_S,     0 = z_F - c y_F - d z_S.
/// b*d = 1 makes the full algebraic Jacobian singular and is rejected.
[[nodiscard]] inline PartitionedDae make_dae_lin(double a = 1.0, double b = 0.3, double c = 1.0,
                                                 double d = 0.3) {
    if (std::abs(1.0 - b * d) < 1e-12)
        throw validation_error("dae-lin: b*d = 1 makes the full algebraic Jacobian singular");
    PartitionedDae p;
    p.dim_slow = 1;
    p.dim_fast = 1;
    p.dim_zslow = 1;
    p.dim_zfast = 1;
    p.f_slow = [](double, const Vec& ys, const Vec&, const Vec&, const Vec& zf) {
        return Vec{-ys[0] + zf[0]};
    };
    p.g_slow = [a, b](double, const Vec& ys, const Vec&, const Vec& zs, const Vec& zf) {
        return Vec{zs[0] - a * ys[0] - b * zf[0]};
    };
    p.f_fast = [](double, const Vec&, const Vec& yf, const Vec& zs, const Vec&) {
        return Vec{-10.0 * yf[0] + zs[0]};
    };
    p.g_fast = [c, d](double, const Vec&, const Vec& yf, const Vec& zs, const Vec& zf) {
        return Vec{zf[0] - c * yf[0] - d * zs[0]};
    };
    p.y_slow0 = {1.0};
    p.y_fast0 = {1.0};
    p.z_slow0 = {1.0};
    p.z_fast0 = {1.0};
    p.t0 = 0.0;
    p.t_end = 1.0;
    return p;
}

/// DAE-ODE(a, b, c): the fast subsystem is a pure ODE; only the slow side
/// carries a constraint, which reads the fast differential variable:
///   y_S' = -y_S + z_S,   0 = z_S - a y_S - b y_F,   y_F' = -10 y_F + c z_S.
[[nodiscard]] inline PartitionedDae make_dae_ode(double a = 1.0, double b = 0.4, double c = 1.0) {
    PartitionedDae p;
    p.dim_slow = 1;
    p.dim_fast = 1;
    p.dim_zslow = 1;
    p.dim_zfast = 0;
    p.f_slow = [](double, const Vec& ys, const Vec&, const Vec& zs, const Vec&) {
        return Vec{-ys[0] + zs[0]};
    };
    p.g_slow = [a, b](double, const Vec& ys, const Vec& yf, const Vec& zs, const Vec&) {
        return Vec{zs[0] - a * ys[0] - b * yf[0]};
    };
    p.f_fast = [c](double, const Vec&, const Vec& yf, const Vec& zs, const Vec&) {
        return Vec{-10.0 * yf[0] + c * zs[0]};
    };
    p.y_slow0 = {1.0};
    p.y_fast0 = {1.0};
    p.z_slow0 = {1.0};
    p.t0 = 0.0;
    p.t_end = 1.0;
    return p;
}

namespace detail {

inline double get_param(const std::map<std::string, double>& params, const std::string& key,
                        double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

inline void reject_unknown_params(const std::map<std::string, double>& params,
                                  std::initializer_list<const char*> known) {
    for (const auto& [key, value] : params) {
        (void)value;
        bool ok = false;
        for (const char* k : known)
            if (key == k) ok = true;
        if (!ok) throw validation_error("unknown problem parameter: " + key);
    }
}

inline CatalogEntry make_lin2_entry(const std::string& id, double fast_rate,
                                    const std::map<std::string, double>& params) {
    reject_unknown_params(params, {"c_sf", "c_fs", "fast_rate", "t_end"});
    const double c_sf = get_param(params, "c_sf", 0.1);
    const double c_fs = get_param(params, "c_fs", 0.2);
    const double rate = get_param(params, "fast_rate", fast_rate);
    CatalogEntry e;
    e.id = id;
    std::ostringstream desc;
    desc << "linear 2x2, rates -1 / " << rate << ", weak coupling; reference: matrix exponential";
    e.description = desc.str();
    e.ode = make_lin2(c_sf, c_fs, rate);
    e.ode->t_end = get_param(params, "t_end", 1.0);
    PartitionedOde prob = *e.ode;
    e.reference = cached_reference([prob, c_sf, c_fs, rate](double t) {
        Vec y = expm2_apply(-1.0, c_sf, c_fs, rate, t - prob.t0, {prob.y_slow0[0], prob.y_fast0[0]});
        return RefState{{y[0]}, {y[1]}, {}, {}};
    });
    e.self_check = [prob, c_sf, c_fs, rate]() {
        const double t = prob.t_end;
        Vec exact = expm2_apply(-1.0, c_sf, c_fs, rate, t - prob.t0,
                                {prob.y_slow0[0], prob.y_fast0[0]});
        const std::size_t n = static_cast<std::size_t>(std::ceil((t - prob.t0) / 1e-4));
        Vec fine = rk4_monolithic(prob, t, n);
        Vec finer = rk4_monolithic(prob, t, 2 * n);
        double d_res = 0.0, d_x = 0.0;
        for (std::size_t i = 0; i < 2; ++i) {
            d_res = std::max(d_res, std::abs(fine[i] - finer[i]));
            d_x = std::max(d_x, std::abs(finer[i] - exact[i]));
        }
        if (d_res > 1e-10)
            throw numerical_error("lin2 self-check: RK4 resolutions disagree", t, d_res);
        if (d_x > 1e-9)
            throw numerical_error("lin2 self-check: matrix exponential vs RK4 disagree", t, d_x);
    };
    return e;
}

inline CatalogEntry make_nonlin_entry(const std::map<std::string, double>& params) {
    reject_unknown_params(params, {"t_end"});
    CatalogEntry e;
    e.id = "nonlin-osc";
    e.description = "nonlinear, rates -1 / -8, quadratic and sinusoidal coupling; "
                    "reference: fine RK4";
    e.ode = make_nonlin_osc();
    e.ode->t_end = get_param(params, "t_end", 1.0);
    PartitionedOde prob = *e.ode;
    const double h_ref = 2.5e-4;
    e.reference = cached_reference([prob, h_ref](double t) {
        const std::size_t n =
            std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((t - prob.t0) / h_ref)));
        Vec w = rk4_monolithic(prob, t, 2 * n);
        return RefState{{w[0]}, {w[1]}, {}, {}};
    });
    e.self_check = [prob, h_ref]() {
        const double t = prob.t_end;
        const std::size_t n = static_cast<std::size_t>(std::ceil((t - prob.t0) / h_ref));
        Vec a = rk4_monolithic(prob, t, n);
        Vec b = rk4_monolithic(prob, t, 2 * n);
        double d = std::max(std::abs(a[0] - b[0]), std::abs(a[1] - b[1]));
        if (d > 1e-10)
            throw numerical_error("nonlin-osc self-check: RK4 resolutions disagree", t, d);
    };
    return e;
}

inline CatalogEntry make_dae_entry(const std::string& id,
                                   const std::map<std::string, double>& params) {
    CatalogEntry e;
    e.id = id;
    PartitionedDae prob;
    if (id == "dae-lin") {
        reject_unknown_params(params, {"a", "b", "c", "d", "t_end"});
        prob = make_dae_lin(get_param(params, "a", 1.0), get_param(params, "b", 0.3),
                            get_param(params, "c", 1.0), get_param(params, "d", 0.3));
        e.description = "linear index-1 DAE, tunable constraint coupling (a,b,c,d); "
                        "reference: Richardson-extrapolated implicit Euler";
    } else {
        reject_unknown_params(params, {"a", "b", "c", "t_end"});
        prob = make_dae_ode(get_param(params, "a", 1.0), get_param(params, "b", 0.4),
                            get_param(params, "c", 1.0));
        e.description = "DAE-ODE coupling: fast side is a pure ODE, slow constraint reads "
                        "the fast state; reference: Richardson-extrapolated implicit Euler";
    }
    prob.t_end = get_param(params, "t_end", 1.0);
    check_dae_index1(prob);
    e.dae = prob;
    const double h0 = 2e-3;
    const int levels = 4;
    e.reference = cached_reference([prob, h0, levels](double t) {
        RichardsonResult r = richardson_ie(prob, t, h0, levels);
        if (r.self_diff > 1e-10)
            throw numerical_error(
                "DAE reference self-check failed (Richardson levels disagree)", t, r.self_diff);
        const std::size_t ns = prob.dim_slow, nzs = prob.dim_zslow;
        return RefState{
            Vec(r.y.begin(), r.y.begin() + static_cast<std::ptrdiff_t>(ns)),
            Vec(r.y.begin() + static_cast<std::ptrdiff_t>(ns), r.y.end()),
            Vec(r.z.begin(), r.z.begin() + static_cast<std::ptrdiff_t>(nzs)),
            Vec(r.z.begin() + static_cast<std::ptrdiff_t>(nzs), r.z.end())};
    });
    auto reference = e.reference;
    double t_end = prob.t_end;
    e.self_check = [reference, t_end]() { reference(t_end); };
    return e;
}

}  // namespace detail

[[nodiscard]] inline std::vector<std::string> catalog_ids() {
    return {"lin2", "lin2-stiff", "nonlin-osc", "dae-lin", "dae-ode"};
}

/// Build a catalog problem by id with optional parameter overrides.
[[nodiscard]] inline CatalogEntry make_problem(const std::string& id,
                                               const std::map<std::string, double>& params = {}) {
    if (id == "lin2") return detail::make_lin2_entry(id, -10.0, params);
    if (id == "lin2-stiff") return detail::make_lin2_entry(id, -200.0, params);
    if (id == "nonlin-osc") return detail::make_nonlin_entry(params);
    if (id == "dae-lin" || id == "dae-ode") return detail::make_dae_entry(id, params);
    std::string known;
    for (const auto& k : catalog_ids()) known += " " + k;
    throw validation_error("unknown problem id '" + id + "'; known problems:" + known);
}

/// All catalog entries with default parameters.
[[nodiscard]] inline std::vector<CatalogEntry> catalog() {
    std::vector<CatalogEntry> out;
    for (const auto& id : catalog_ids()) out.push_back(make_problem(id));
    return out;
}

}  // namespace multirate
