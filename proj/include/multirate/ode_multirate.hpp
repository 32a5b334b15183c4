#pragma once

// The three multirate coupling strategies over one macro window and the
// full-horizon driver. Each window advances the slow subsystem by one step
// of the window length and the fast subsystem by m micro steps, with the
// partner supplied as a frozen waveform:
//
//   fully-decoupled: both subsystems run against extrapolated partner data
//     from the window start (they may run concurrently);
//   slowest-first:   the slow subsystem runs first against extrapolated
//     fast data, then the fast subsystem runs against interpolated slow data;
//   fastest-first:   the fast subsystem runs first against extrapolated
//     slow data, then the slow subsystem runs against interpolated fast data.

#include <future>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "multirate/core.hpp"
#include "multirate/steppers.hpp"
#include "multirate/waveform.hpp"

namespace multirate {

/// Node data of one channel from the preceding macro window, plus a
/// continuous representation when the producing scheme offered one.
struct ChannelHistory {
    std::vector<double> times;
    std::vector<Vec> values;
    std::optional<Waveform> dense;
};

struct WindowHistory {
    bool available = false;
    ChannelHistory slow;
    ChannelHistory fast;
};

struct WindowResult {
    Vec slow_end;
    std::vector<double> fast_times;  // m+1 nodes from window start to end
    std::vector<Vec> fast_values;
    Waveform slow_coupling;  // waveform the fast subsystem read
    Waveform fast_coupling;  // waveform the slow subsystem read
    std::optional<Waveform> slow_dense;
};

namespace detail {

/// Build the extrapolated waveform for one coupling channel on
/// [t_bar, t_bar + window_len]. Orders above what the available data
/// supports fall back to the best achievable order and record a warning.
inline Waveform build_extrapolation(int order, double t_bar, double window_len, const Vec& value,
                                    const Vec* slope, const ChannelHistory* history,
                                    const char* channel, std::vector<std::string>* warnings) {
    auto warn = [&](const std::string& msg) {
        if (warnings) warnings->push_back(msg);
    };
    if (order <= 0) return Waveform::constant(t_bar, value, window_len);
    if (order == 1) {
        if (slope) return Waveform::linear(t_bar, value, *slope, window_len);
        if (history && history->times.size() >= 2)
            return Waveform::history_poly(history->times, history->values, 1, t_bar,
                                          t_bar + window_len);
        warn(std::string("extrapolation order 1 unavailable for ") + channel +
             " channel on the first window; falling back to constant");
        return Waveform::constant(t_bar, value, window_len);
    }
    // order == 2: previous-window data only
    if (history && history->dense) {
        const Waveform& d = *history->dense;
        std::vector<double> ts;
        std::vector<Vec> vs;
        for (int i = 0; i <= 2; ++i) {
            const double t = d.t_begin() + (d.t_end() - d.t_begin()) * i / 2.0;
            ts.push_back(t);
            vs.push_back(d.eval(t));
        }
        return Waveform::history_poly(std::move(ts), std::move(vs), 2, t_bar, t_bar + window_len);
    }
    if (history && history->times.size() >= 3)
        return Waveform::history_poly(history->times, history->values, 2, t_bar,
                                      t_bar + window_len);
    warn(std::string("extrapolation order 2 unavailable for ") + channel +
         " channel without history; falling back");
    return build_extrapolation(1, t_bar, window_len, value, slope, history, channel, warnings);
}

/// Micro grid of a window; the last node is forced to the exact window end.
inline std::vector<double> micro_times(double t_bar, double window_len, int m) {
    std::vector<double> ts(static_cast<std::size_t>(m) + 1);
    for (int j = 0; j < m; ++j) ts[static_cast<std::size_t>(j)] = t_bar + window_len * j / m;
    ts[static_cast<std::size_t>(m)] = t_bar + window_len;
    return ts;
}

/// Interpolant the fast subsystem reads for the slow data in slowest-first:
/// order 0 takes the freshly computed endpoint, order 1 the window
/// endpoints, higher orders the scheme's dense output.
inline Waveform slow_interpolant(const MacroStepPlan& plan, double t_bar, double window_len,
                                 const Vec& y_begin, const Vec& y_end,
                                 const std::optional<Waveform>& dense) {
    const double t1 = t_bar + window_len;
    if (plan.interp_order <= 0) return Waveform::node_interp({t1}, {y_end}, 0, t_bar, t1);
    if (plan.interp_order == 1)
        return Waveform::node_interp({t_bar, t1}, {y_begin, y_end}, 1, t_bar, t1);
    return *dense;
}

/// Interpolant the slow subsystem reads for the fast data in fastest-first:
/// degree capped by the requested order, through the last q+1 micro nodes.
inline Waveform fast_interpolant(const MacroStepPlan& plan, double t_bar, double window_len,
                                 const std::vector<double>& times, const std::vector<Vec>& values) {
    const int q = std::min<int>(plan.interp_order, static_cast<int>(times.size()) - 1);
    return Waveform::node_interp(times, values, std::max(q, 0), t_bar, t_bar + window_len);
}

struct FastSweepOut {
    std::vector<double> times;
    std::vector<Vec> values;
};

inline FastSweepOut run_fast_micro_steps(const PartitionedOde& problem, const MacroStepPlan& plan,
                                         double t_bar, double window_len, const Vec& y_fast,
                                         const Waveform& slow_wf) {
    OdeRhs rhs = [&problem](double t, const Vec& y, const Vec& partner) {
        return problem.f_fast(t, partner, y);
    };
    FastSweepOut out;
    out.times = micro_times(t_bar, window_len, plan.m);
    out.values.reserve(out.times.size());
    out.values.push_back(y_fast);
    Vec y = y_fast;
    for (int j = 0; j < plan.m; ++j) {
        const double t = out.times[static_cast<std::size_t>(j)];
        const double h = out.times[static_cast<std::size_t>(j) + 1] - t;
        y = ode_step(plan.scheme_fast, rhs, t, y, h, slow_wf);
        out.values.push_back(y);
    }
    return out;
}

inline bool need_slow_dense(const MacroStepPlan& plan) {
    if (plan.extrap_order >= 2) return true;
    return plan.strategy == Strategy::SlowestFirst && plan.interp_order >= 2;
}

}  // namespace detail

/// Both subsystems advance independently against extrapolated partner data.
/// With `parallel` set the two integrations run concurrently; the result is
/// identical to sequential execution.
inline WindowResult window_fully_decoupled(const PartitionedOde& problem, double t_bar,
                                           const Vec& y_slow, const Vec& y_fast,
                                           const MacroStepPlan& plan, const WindowHistory& history,
                                           std::vector<std::string>* warnings = nullptr,
                                           bool parallel = false) {
    const double len = plan.H;
    Vec slope_s, slope_f;
    if (plan.extrap_order >= 1) {
        slope_s = problem.f_slow(t_bar, y_slow, y_fast);
        slope_f = problem.f_fast(t_bar, y_slow, y_fast);
    }
    WindowResult r;
    r.slow_coupling = detail::build_extrapolation(
        plan.extrap_order, t_bar, len, y_slow, plan.extrap_order >= 1 ? &slope_s : nullptr,
        history.available ? &history.slow : nullptr, "slow", warnings);
    r.fast_coupling = detail::build_extrapolation(
        plan.extrap_order, t_bar, len, y_fast, plan.extrap_order >= 1 ? &slope_f : nullptr,
        history.available ? &history.fast : nullptr, "fast", warnings);

    OdeRhs slow_rhs = [&problem](double t, const Vec& y, const Vec& partner) {
        return problem.f_slow(t, y, partner);
    };
    auto slow_task = [&]() -> std::pair<Vec, std::optional<Waveform>> {
        if (detail::need_slow_dense(plan)) {
            auto d = ode_step_dense(plan.scheme_slow, slow_rhs, t_bar, y_slow, len,
                                    r.fast_coupling);
            return {std::move(d.y), std::move(d.dense)};
        }
        return {ode_step(plan.scheme_slow, slow_rhs, t_bar, y_slow, len, r.fast_coupling),
                std::nullopt};
    };
    auto fast_task = [&]() {
        return detail::run_fast_micro_steps(problem, plan, t_bar, len, y_fast, r.slow_coupling);
    };

    if (parallel) {
        auto fut = std::async(std::launch::async, fast_task);
        auto slow = slow_task();
        auto fast = fut.get();
        r.slow_end = std::move(slow.first);
        r.slow_dense = std::move(slow.second);
        r.fast_times = std::move(fast.times);
        r.fast_values = std::move(fast.values);
    } else {
        auto slow = slow_task();
        auto fast = fast_task();
        r.slow_end = std::move(slow.first);
        r.slow_dense = std::move(slow.second);
        r.fast_times = std::move(fast.times);
        r.fast_values = std::move(fast.values);
    }
    return r;
}

/// Slow subsystem first (against extrapolated fast data), then the fast
/// subsystem against interpolated slow data from the current window.
inline WindowResult window_slowest_first(const PartitionedOde& problem, double t_bar,
                                         const Vec& y_slow, const Vec& y_fast,
                                         const MacroStepPlan& plan, const WindowHistory& history,
                                         std::vector<std::string>* warnings = nullptr) {
    const double len = plan.H;
    Vec slope_f;
    if (plan.extrap_order >= 1) slope_f = problem.f_fast(t_bar, y_slow, y_fast);
    WindowResult r;
    r.fast_coupling = detail::build_extrapolation(
        plan.extrap_order, t_bar, len, y_fast, plan.extrap_order >= 1 ? &slope_f : nullptr,
        history.available ? &history.fast : nullptr, "fast", warnings);

    OdeRhs slow_rhs = [&problem](double t, const Vec& y, const Vec& partner) {
        return problem.f_slow(t, y, partner);
    };
    std::optional<Waveform> dense;
    if (detail::need_slow_dense(plan)) {
        auto d = ode_step_dense(plan.scheme_slow, slow_rhs, t_bar, y_slow, len, r.fast_coupling);
        r.slow_end = std::move(d.y);
        dense = std::move(d.dense);
    } else {
        r.slow_end = ode_step(plan.scheme_slow, slow_rhs, t_bar, y_slow, len, r.fast_coupling);
    }
    r.slow_dense = dense;
    r.slow_coupling = detail::slow_interpolant(plan, t_bar, len, y_slow, r.slow_end, dense);

    auto fast = detail::run_fast_micro_steps(problem, plan, t_bar, len, y_fast, r.slow_coupling);
    r.fast_times = std::move(fast.times);
    r.fast_values = std::move(fast.values);
    return r;
}

/// Fast subsystem first (against extrapolated slow data), then the slow
/// subsystem against interpolated fast micro-node data.
inline WindowResult window_fastest_first(const PartitionedOde& problem, double t_bar,
                                         const Vec& y_slow, const Vec& y_fast,
                                         const MacroStepPlan& plan, const WindowHistory& history,
                                         std::vector<std::string>* warnings = nullptr) {
    const double len = plan.H;
    Vec slope_s;
    if (plan.extrap_order >= 1) slope_s = problem.f_slow(t_bar, y_slow, y_fast);
    WindowResult r;
    r.slow_coupling = detail::build_extrapolation(
        plan.extrap_order, t_bar, len, y_slow, plan.extrap_order >= 1 ? &slope_s : nullptr,
        history.available ? &history.slow : nullptr, "slow", warnings);

    auto fast = detail::run_fast_micro_steps(problem, plan, t_bar, len, y_fast, r.slow_coupling);
    r.fast_coupling = detail::fast_interpolant(plan, t_bar, len, fast.times, fast.values);

    OdeRhs slow_rhs = [&problem](double t, const Vec& y, const Vec& partner) {
        return problem.f_slow(t, y, partner);
    };
    if (detail::need_slow_dense(plan)) {
        auto d = ode_step_dense(plan.scheme_slow, slow_rhs, t_bar, y_slow, len, r.fast_coupling);
        r.slow_end = std::move(d.y);
        r.slow_dense = std::move(d.dense);
    } else {
        r.slow_end = ode_step(plan.scheme_slow, slow_rhs, t_bar, y_slow, len, r.fast_coupling);
    }
    r.fast_times = std::move(fast.times);
    r.fast_values = std::move(fast.values);
    return r;
}

struct IntegrateOptions {
    /// Run the two subsystem integrations of fully-decoupled windows
    /// concurrently. Results are identical to sequential execution.
    bool parallel_fully_decoupled = false;
};

namespace detail {

inline Trajectory integrate_single_rate(const PartitionedOde& problem, const MacroStepPlan& plan) {
    const std::size_t ns = problem.dim_slow;
    OdeRhs mono = [&problem, ns](double t, const Vec& w, const Vec&) {
        Vec ys(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(ns));
        Vec yf(w.begin() + static_cast<std::ptrdiff_t>(ns), w.end());
        Vec ds = problem.f_slow(t, ys, yf);
        Vec df = problem.f_fast(t, ys, yf);
        ds.insert(ds.end(), df.begin(), df.end());
        return ds;
    };
    Trajectory traj;
    traj.macro_times.push_back(problem.t0);
    traj.slow_states.push_back(problem.y_slow0);
    traj.fast_micro_times.push_back(problem.t0);
    traj.fast_states.push_back(problem.y_fast0);
    Vec w = problem.y_slow0;
    w.insert(w.end(), problem.y_fast0.begin(), problem.y_fast0.end());
    const auto windows = macro_windows(problem.t0, problem.t_end, plan.H, plan.m);
    for (const auto& win : windows) {
        const Waveform dummy = Waveform::constant(win.t_begin, Vec{}, win.length());
        const auto ts = micro_times(win.t_begin, win.length(), win.m);
        for (int j = 0; j < win.m; ++j) {
            const double t = ts[static_cast<std::size_t>(j)];
            const double h = ts[static_cast<std::size_t>(j) + 1] - t;
            w = ode_step(plan.scheme_slow, mono, t, w, h, dummy);
            traj.fast_micro_times.push_back(ts[static_cast<std::size_t>(j) + 1]);
            traj.fast_states.push_back(Vec(w.begin() + static_cast<std::ptrdiff_t>(ns), w.end()));
        }
        traj.macro_times.push_back(win.t_end);
        traj.slow_states.push_back(Vec(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(ns)));
    }
    return traj;
}

}  // namespace detail

/// Tile [t0, t_end] with macro windows, thread history for higher-order
/// extrapolation, and return the full trajectory.
inline Trajectory integrate(const PartitionedOde& problem, MacroStepPlan plan,
                            const IntegrateOptions& options = {}) {
    plan = validate_plan(plan, problem);
    if (problem.single_rate) return detail::integrate_single_rate(problem, plan);

    Trajectory traj;
    traj.macro_times.push_back(problem.t0);
    traj.slow_states.push_back(problem.y_slow0);
    traj.fast_micro_times.push_back(problem.t0);
    traj.fast_states.push_back(problem.y_fast0);

    Vec y_slow = problem.y_slow0;
    Vec y_fast = problem.y_fast0;
    WindowHistory history;
    const auto windows = macro_windows(problem.t0, problem.t_end, plan.H, plan.m);
    for (const auto& win : windows) {
        MacroStepPlan wplan = plan;
        wplan.H = win.length();
        WindowResult r;
        switch (plan.strategy) {
            case Strategy::FullyDecoupled:
                r = window_fully_decoupled(problem, win.t_begin, y_slow, y_fast, wplan, history,
                                           &traj.warnings, options.parallel_fully_decoupled);
                break;
            case Strategy::SlowestFirst:
                r = window_slowest_first(problem, win.t_begin, y_slow, y_fast, wplan, history,
                                         &traj.warnings);
                break;
            case Strategy::FastestFirst:
                r = window_fastest_first(problem, win.t_begin, y_slow, y_fast, wplan, history,
                                         &traj.warnings);
                break;
        }
        for (std::size_t j = 1; j < r.fast_times.size(); ++j) {
            traj.fast_micro_times.push_back(r.fast_times[j]);
            traj.fast_states.push_back(r.fast_values[j]);
        }
        traj.macro_times.push_back(win.t_end);
        traj.slow_states.push_back(r.slow_end);

        history.available = true;
        history.slow = ChannelHistory{{win.t_begin, win.t_end}, {y_slow, r.slow_end},
                                      r.slow_dense};
        history.fast = ChannelHistory{r.fast_times, r.fast_values, std::nullopt};
        y_slow = r.slow_end;
        y_fast = r.fast_values.back();
    }
    return traj;
}

}  // namespace multirate
