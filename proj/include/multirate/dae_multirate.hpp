#pragma once

// Dynamic-iteration formulation for the split index-1 DAE: the three
// splitting schemes, windowed iteration with k sweeps, and the k = 1
// co-simulation mode. Within a sweep each subsystem is advanced by
// implicit Euler (one macro step for the slow part, m micro steps for the
// fast part) with partner channels bound either to the previous iterate's
// waveforms (old) or to freshly computed current-sweep data (new),
// depending on the strategy. Algebraic channels are carried as waveforms
// exactly like differential ones.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "multirate/core.hpp"
#include "multirate/ode_multirate.hpp"
#include "multirate/steppers.hpp"
#include "multirate/waveform.hpp"

namespace multirate {

struct DaeState {
    Vec y_slow;
    Vec y_fast;
    Vec z_slow;
    Vec z_fast;
};

/// Argument binding of the splitting functions (F_S, G_S, F_F, G_F): which
/// partner arguments read the new iterate and which the old one. Binding
/// old = new = x reproduces (f_S, g_S, f_F, g_F) exactly.
struct SplittingScheme {
    Strategy strategy = Strategy::FullyDecoupled;

    [[nodiscard]] bool slow_reads_new_fast() const { return strategy == Strategy::FastestFirst; }
    [[nodiscard]] bool fast_reads_new_slow() const { return strategy == Strategy::SlowestFirst; }

    [[nodiscard]] Vec F_slow(const PartitionedDae& p, double t, const DaeState& x_new,
                             const DaeState& x_old) const {
        const DaeState& fast_src = slow_reads_new_fast() ? x_new : x_old;
        return p.f_slow(t, x_new.y_slow, fast_src.y_fast, x_new.z_slow, fast_src.z_fast);
    }
    [[nodiscard]] Vec G_slow(const PartitionedDae& p, double t, const DaeState& x_new,
                             const DaeState& x_old) const {
        const DaeState& fast_src = slow_reads_new_fast() ? x_new : x_old;
        return p.g_slow(t, x_new.y_slow, fast_src.y_fast, x_new.z_slow, fast_src.z_fast);
    }
    [[nodiscard]] Vec F_fast(const PartitionedDae& p, double t, const DaeState& x_new,
                             const DaeState& x_old) const {
        const DaeState& slow_src = fast_reads_new_slow() ? x_new : x_old;
        return p.f_fast(t, slow_src.y_slow, x_new.y_fast, slow_src.z_slow, x_new.z_fast);
    }
    [[nodiscard]] Vec G_fast(const PartitionedDae& p, double t, const DaeState& x_new,
                             const DaeState& x_old) const {
        const DaeState& slow_src = fast_reads_new_slow() ? x_new : x_old;
        return p.g_fast(t, slow_src.y_slow, x_new.y_fast, slow_src.z_slow, x_new.z_fast);
    }
};

/// Solve the full algebraic system at (t0, y0) for consistent z.
[[nodiscard]] inline std::pair<Vec, Vec> consistent_initialize(const PartitionedDae& p, double t0,
                                                               const Vec& y_slow, const Vec& y_fast,
                                                               const Vec& z_slow_guess,
                                                               const Vec& z_fast_guess,
                                                               NewtonConfig cfg = {1e-12, 50}) {
    const std::size_t ns = z_slow_guess.size(), nf = z_fast_guess.size();
    if (ns + nf == 0) return {Vec{}, Vec{}};
    cfg.abs_tol = std::min(cfg.abs_tol, p.consistency_tol);
    auto res = [&](const Vec& z) {
        Vec zs(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(ns));
        Vec zf(z.begin() + static_cast<std::ptrdiff_t>(ns), z.end());
        Vec r;
        r.reserve(ns + nf);
        if (ns > 0) {
            Vec gs = p.g_slow(t0, y_slow, y_fast, zs, zf);
            r.insert(r.end(), gs.begin(), gs.end());
        }
        if (nf > 0) {
            Vec gf = p.g_fast(t0, y_slow, y_fast, zs, zf);
            r.insert(r.end(), gf.begin(), gf.end());
        }
        return r;
    };
    Vec z0(ns + nf);
    std::copy(z_slow_guess.begin(), z_slow_guess.end(), z0.begin());
    std::copy(z_fast_guess.begin(), z_fast_guess.end(), z0.begin() + static_cast<std::ptrdiff_t>(ns));
    Vec z = newton_solve(res, std::move(z0), cfg, t0);
    return {Vec(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(ns)),
            Vec(z.begin() + static_cast<std::ptrdiff_t>(ns), z.end())};
}

[[nodiscard]] inline std::pair<Vec, Vec> consistent_initialize(const PartitionedDae& p) {
    return consistent_initialize(p, p.t0, p.y_slow0, p.y_fast0, p.z_slow0, p.z_fast0);
}

struct DaeWindowHistory {
    bool available = false;
    ChannelHistory slow_y, slow_z, fast_y, fast_z;
};

struct DaeWindowResult {
    Vec slow_end_y;
    Vec slow_end_z;
    std::vector<double> fast_times;
    std::vector<Vec> fast_y_values;
    std::vector<Vec> fast_z_values;
    /// Endpoint state after each sweep (diagnostics for contraction studies).
    std::vector<DaeState> sweep_endpoints;
    /// Iterate-0 extrapolations (the operators relevant for stability).
    Waveform extrap_slow_y, extrap_slow_z, extrap_fast_y, extrap_fast_z;
};

namespace detail {

struct DaeChannelWaveforms {
    Waveform slow_y, slow_z, fast_y, fast_z;
};

/// Interpolants of freshly computed slow data per the slowest-first rule.
inline std::pair<Waveform, Waveform> new_slow_waveforms(const MacroStepPlan& plan, double t_bar,
                                                        double len, const Vec& y0, const Vec& y1,
                                                        const Vec& z0, const Vec& z1) {
    const double t1 = t_bar + len;
    auto build = [&](const Vec& a, const Vec& b) {
        if (a.empty()) return Waveform::constant(t_bar, Vec{}, len);
        if (plan.interp_order <= 0) return Waveform::node_interp({t1}, {b}, 0, t_bar, t1);
        return Waveform::node_interp({t_bar, t1}, {a, b}, 1, t_bar, t1);
    };
    return {build(y0, y1), build(z0, z1)};
}

/// Interpolants of freshly computed fast micro nodes per the fastest-first
/// rule (last interp_order + 1 nodes).
inline Waveform new_fast_waveform(const MacroStepPlan& plan, double t_bar, double len,
                                  const std::vector<double>& times, const std::vector<Vec>& values) {
    if (values.front().empty()) return Waveform::constant(t_bar, Vec{}, len);
    const int q = std::min<int>(plan.interp_order, static_cast<int>(times.size()) - 1);
    return Waveform::node_interp(times, values, std::max(q, 0), t_bar, t_bar + len);
}

/// Previous-sweep data carried into the next sweep: linear endpoints for
/// the slow channels, piecewise linear through the micro nodes for the
/// fast channels (robust for any m).
inline Waveform carry_slow(double t0, double t1, const Vec& a, const Vec& b) {
    if (a.empty()) return Waveform::constant(t0, Vec{}, t1 - t0);
    return Waveform::node_interp({t0, t1}, {a, b}, 1, t0, t1);
}

inline Waveform carry_fast(const std::vector<double>& times, const std::vector<Vec>& values) {
    if (values.front().empty())
        return Waveform::constant(times.front(), Vec{}, times.back() - times.front());
    return Waveform::piecewise_linear(times, values);
}

}  // namespace detail

/// One macro window of the dynamic iteration: initialize iterate-0
/// waveforms by extrapolation, then perform k sweeps.
inline DaeWindowResult dae_window(const PartitionedDae& problem, double t_bar,
                                  const DaeState& state, const MacroStepPlan& plan,
                                  const DaeWindowHistory& history,
                                  std::vector<std::string>* warnings = nullptr,
                                  const NewtonConfig& newton = {}) {
    const double len = plan.H;
    const double t1 = t_bar + len;

    Vec slope_ys, slope_yf;
    if (plan.extrap_order >= 1) {
        slope_ys = problem.f_slow(t_bar, state.y_slow, state.y_fast, state.z_slow, state.z_fast);
        slope_yf = problem.f_fast(t_bar, state.y_slow, state.y_fast, state.z_slow, state.z_fast);
    }
    const bool hist = history.available;
    detail::DaeChannelWaveforms it0;
    it0.slow_y = detail::build_extrapolation(plan.extrap_order, t_bar, len, state.y_slow,
                                             plan.extrap_order >= 1 ? &slope_ys : nullptr,
                                             hist ? &history.slow_y : nullptr, "slow y", warnings);
    it0.fast_y = detail::build_extrapolation(plan.extrap_order, t_bar, len, state.y_fast,
                                             plan.extrap_order >= 1 ? &slope_yf : nullptr,
                                             hist ? &history.fast_y : nullptr, "fast y", warnings);
    // algebraic channels have no right-hand side slope; orders >= 1 need history
    it0.slow_z = state.z_slow.empty()
                     ? Waveform::constant(t_bar, Vec{}, len)
                     : detail::build_extrapolation(plan.extrap_order, t_bar, len, state.z_slow,
                                                   nullptr, hist ? &history.slow_z : nullptr,
                                                   "slow z", warnings);
    it0.fast_z = state.z_fast.empty()
                     ? Waveform::constant(t_bar, Vec{}, len)
                     : detail::build_extrapolation(plan.extrap_order, t_bar, len, state.z_fast,
                                                   nullptr, hist ? &history.fast_z : nullptr,
                                                   "fast z", warnings);

    // subsystem functions with partner routing
    SubsystemFn f_slow_sub = [&problem](double t, const Vec& y, const Vec& z, const Vec& yo,
                                        const Vec& zo) { return problem.f_slow(t, y, yo, z, zo); };
    SubsystemFn g_slow_sub = [&problem](double t, const Vec& y, const Vec& z, const Vec& yo,
                                        const Vec& zo) { return problem.g_slow(t, y, yo, z, zo); };
    SubsystemFn f_fast_sub = [&problem](double t, const Vec& y, const Vec& z, const Vec& yo,
                                        const Vec& zo) { return problem.f_fast(t, yo, y, zo, z); };
    SubsystemFn g_fast_sub = [&problem](double t, const Vec& y, const Vec& z, const Vec& yo,
                                        const Vec& zo) { return problem.g_fast(t, yo, y, zo, z); };

    DaeWindowResult r;
    r.extrap_slow_y = it0.slow_y;
    r.extrap_slow_z = it0.slow_z;
    r.extrap_fast_y = it0.fast_y;
    r.extrap_fast_z = it0.fast_z;

    detail::DaeChannelWaveforms iterate = it0;
    const auto ts = detail::micro_times(t_bar, len, plan.m);

    auto run_slow = [&](const Waveform& wy, const Waveform& wz) {
        return implicit_euler_dae_step(f_slow_sub, g_slow_sub, t_bar, state.y_slow, state.z_slow,
                                       len, wy, wz, newton);
    };
    auto run_fast = [&](const Waveform& wy, const Waveform& wz, std::vector<Vec>& ys,
                        std::vector<Vec>& zs) {
        ys.clear();
        zs.clear();
        ys.push_back(state.y_fast);
        zs.push_back(state.z_fast);
        Vec y = state.y_fast, z = state.z_fast;
        for (int j = 0; j < plan.m; ++j) {
            const double t = ts[static_cast<std::size_t>(j)];
            const double h = ts[static_cast<std::size_t>(j) + 1] - t;
            auto [y1, z1] =
                implicit_euler_dae_step(f_fast_sub, g_fast_sub, t, y, z, h, wy, wz, newton);
            y = std::move(y1);
            z = std::move(z1);
            ys.push_back(y);
            zs.push_back(z);
        }
    };

    for (int sweep = 0; sweep < plan.k; ++sweep) {
        Vec slow_y1, slow_z1;
        std::vector<Vec> fast_ys, fast_zs;
        switch (plan.strategy) {
            case Strategy::FullyDecoupled: {
                auto slow = run_slow(iterate.fast_y, iterate.fast_z);
                run_fast(iterate.slow_y, iterate.slow_z, fast_ys, fast_zs);
                slow_y1 = std::move(slow.first);
                slow_z1 = std::move(slow.second);
                break;
            }
            case Strategy::SlowestFirst: {
                auto slow = run_slow(iterate.fast_y, iterate.fast_z);
                slow_y1 = std::move(slow.first);
                slow_z1 = std::move(slow.second);
                auto [wy, wz] = detail::new_slow_waveforms(plan, t_bar, len, state.y_slow, slow_y1,
                                                           state.z_slow, slow_z1);
                run_fast(wy, wz, fast_ys, fast_zs);
                break;
            }
            case Strategy::FastestFirst: {
                run_fast(iterate.slow_y, iterate.slow_z, fast_ys, fast_zs);
                Waveform wy = detail::new_fast_waveform(plan, t_bar, len, ts, fast_ys);
                Waveform wz = detail::new_fast_waveform(plan, t_bar, len, ts, fast_zs);
                auto slow = run_slow(wy, wz);
                slow_y1 = std::move(slow.first);
                slow_z1 = std::move(slow.second);
                break;
            }
        }
        r.sweep_endpoints.push_back(
            DaeState{slow_y1, fast_ys.back(), slow_z1, fast_zs.back()});
        if (sweep + 1 < plan.k) {
            iterate.slow_y = detail::carry_slow(t_bar, t1, state.y_slow, slow_y1);
            iterate.slow_z = detail::carry_slow(t_bar, t1, state.z_slow, slow_z1);
            iterate.fast_y = detail::carry_fast(ts, fast_ys);
            iterate.fast_z = detail::carry_fast(ts, fast_zs);
        } else {
            r.slow_end_y = std::move(slow_y1);
            r.slow_end_z = std::move(slow_z1);
            r.fast_times = ts;
            r.fast_y_values = std::move(fast_ys);
            r.fast_z_values = std::move(fast_zs);
        }
    }
    return r;
}

// forward declaration; defined in contraction.hpp
struct ContractionReport;

struct IntegrateDaeOptions {
    /// When set, the run is refused if the report's verdict for the plan's
    /// strategy fails (unless `force` is set).
    const ContractionReport* gate = nullptr;
    bool force = false;
    NewtonConfig newton;
};

namespace detail {

inline Trajectory integrate_dae_single_rate(const PartitionedDae& problem,
                                            const MacroStepPlan& plan,
                                            const NewtonConfig& newton) {
    const std::size_t ns = problem.dim_slow, nzs = problem.dim_zslow;
    auto split_y = [ns](const Vec& y) {
        return std::pair<Vec, Vec>{Vec(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(ns)),
                                   Vec(y.begin() + static_cast<std::ptrdiff_t>(ns), y.end())};
    };
    auto split_z = [nzs](const Vec& z) {
        return std::pair<Vec, Vec>{Vec(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(nzs)),
                                   Vec(z.begin() + static_cast<std::ptrdiff_t>(nzs), z.end())};
    };
    SubsystemFn f_all = [&problem, split_y, split_z](double t, const Vec& y, const Vec& z,
                                                     const Vec&, const Vec&) {
        auto [ys, yf] = split_y(y);
        auto [zs, zf] = split_z(z);
        Vec out = problem.f_slow(t, ys, yf, zs, zf);
        Vec ff = problem.f_fast(t, ys, yf, zs, zf);
        out.insert(out.end(), ff.begin(), ff.end());
        return out;
    };
    SubsystemFn g_all = [&problem, split_y, split_z](double t, const Vec& y, const Vec& z,
                                                     const Vec&, const Vec&) {
        auto [ys, yf] = split_y(y);
        auto [zs, zf] = split_z(z);
        Vec out;
        if (problem.dim_zslow > 0) {
            Vec gs = problem.g_slow(t, ys, yf, zs, zf);
            out.insert(out.end(), gs.begin(), gs.end());
        }
        if (problem.dim_zfast > 0) {
            Vec gf = problem.g_fast(t, ys, yf, zs, zf);
            out.insert(out.end(), gf.begin(), gf.end());
        }
        return out;
    };

    auto [zs0, zf0] = consistent_initialize(problem);
    Trajectory traj;
    traj.macro_times.push_back(problem.t0);
    traj.slow_states.push_back(problem.y_slow0);
    traj.fast_micro_times.push_back(problem.t0);
    traj.fast_states.push_back(problem.y_fast0);
    traj.z_slow_states.push_back(zs0);
    traj.z_fast_states.push_back(zf0);

    Vec y = problem.y_slow0;
    y.insert(y.end(), problem.y_fast0.begin(), problem.y_fast0.end());
    Vec z = zs0;
    z.insert(z.end(), zf0.begin(), zf0.end());
    const auto windows = macro_windows(problem.t0, problem.t_end, plan.H, plan.m);
    for (const auto& win : windows) {
        const Waveform dummy = Waveform::constant(win.t_begin, Vec{}, win.length());
        const auto ts = micro_times(win.t_begin, win.length(), win.m);
        for (int j = 0; j < win.m; ++j) {
            const double t = ts[static_cast<std::size_t>(j)];
            const double h = ts[static_cast<std::size_t>(j) + 1] - t;
            auto [y1, z1] =
                implicit_euler_dae_step(f_all, g_all, t, y, z, h, dummy, dummy, newton);
            y = std::move(y1);
            z = std::move(z1);
            auto [ys, yf] = split_y(y);
            auto [zs, zf] = split_z(z);
            traj.fast_micro_times.push_back(ts[static_cast<std::size_t>(j) + 1]);
            traj.fast_states.push_back(yf);
            traj.z_fast_states.push_back(zf);
            if (j + 1 == win.m) {
                traj.macro_times.push_back(win.t_end);
                traj.slow_states.push_back(ys);
                traj.z_slow_states.push_back(zs);
            }
        }
    }
    return traj;
}

void enforce_gate(const ContractionReport& report, Strategy strategy);  // contraction.hpp

}  // namespace detail

/// Windowed composition of dae_window with k sweeps per window.
inline Trajectory integrate_dae(const PartitionedDae& problem, MacroStepPlan plan,
                                const IntegrateDaeOptions& options = {}) {
    plan = validate_plan(plan, problem);
    if (options.gate != nullptr && !options.force)
        detail::enforce_gate(*options.gate, plan.strategy);
    if (problem.single_rate)
        return detail::integrate_dae_single_rate(problem, plan, options.newton);

    auto [zs0, zf0] = consistent_initialize(problem);
    DaeState state{problem.y_slow0, problem.y_fast0, zs0, zf0};

    Trajectory traj;
    traj.macro_times.push_back(problem.t0);
    traj.slow_states.push_back(state.y_slow);
    traj.fast_micro_times.push_back(problem.t0);
    traj.fast_states.push_back(state.y_fast);
    traj.z_slow_states.push_back(state.z_slow);
    traj.z_fast_states.push_back(state.z_fast);

    DaeWindowHistory history;
    const auto windows = macro_windows(problem.t0, problem.t_end, plan.H, plan.m);
    for (const auto& win : windows) {
        MacroStepPlan wplan = plan;
        wplan.H = win.length();
        DaeWindowResult r = dae_window(problem, win.t_begin, state, wplan, history,
                                       &traj.warnings, options.newton);
        for (std::size_t j = 1; j < r.fast_times.size(); ++j) {
            traj.fast_micro_times.push_back(r.fast_times[j]);
            traj.fast_states.push_back(r.fast_y_values[j]);
            traj.z_fast_states.push_back(r.fast_z_values[j]);
        }
        traj.macro_times.push_back(win.t_end);
        traj.slow_states.push_back(r.slow_end_y);
        traj.z_slow_states.push_back(r.slow_end_z);

        history.available = true;
        history.slow_y = ChannelHistory{{win.t_begin, win.t_end}, {state.y_slow, r.slow_end_y},
                                        std::nullopt};
        history.slow_z = ChannelHistory{{win.t_begin, win.t_end}, {state.z_slow, r.slow_end_z},
                                        std::nullopt};
        history.fast_y = ChannelHistory{r.fast_times, r.fast_y_values, std::nullopt};
        history.fast_z = ChannelHistory{r.fast_times, r.fast_z_values, std::nullopt};
        state = DaeState{r.slow_end_y, r.fast_y_values.back(), r.slow_end_z,
                         r.fast_z_values.back()};
    }
    return traj;
}

}  // namespace multirate
