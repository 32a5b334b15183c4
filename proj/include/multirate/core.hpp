#pragma once

// Problem definitions, integration plans, grids and trajectories shared by
// every other component. Slow and fast states are kept separate throughout
// (component-wise partitioning); converting an unpartitioned system into
// this form is the caller's job. All floating computation is 64-bit.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "multirate/linalg.hpp"

namespace multirate {

// ---------------------------------------------------------------------------
// Error types. The CLI maps these onto exit codes.
// ---------------------------------------------------------------------------

/// Invalid user input (plans, problem definitions, config files).
class validation_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Failure of a numerical procedure (Newton divergence, singular Jacobian, ...).
class numerical_error : public std::runtime_error {
public:
    numerical_error(const std::string& what, double t, double residual)
        : std::runtime_error(what), t_(t), residual_(residual) {}

    [[nodiscard]] double t() const noexcept { return t_; }
    [[nodiscard]] double residual() const noexcept { return residual_; }

private:
    double t_;
    double residual_;
};

/// A stability gate refused to run an integration.
class stability_gate_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Coupling strategies and base schemes
// ---------------------------------------------------------------------------

enum class Strategy { FullyDecoupled, SlowestFirst, FastestFirst };

[[nodiscard]] inline std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::FullyDecoupled: return "fully-decoupled";
        case Strategy::SlowestFirst: return "slowest-first";
        case Strategy::FastestFirst: return "fastest-first";
    }
    return "?";
}

[[nodiscard]] inline std::optional<Strategy> strategy_from_string(const std::string& s) {
    if (s == "fully-decoupled") return Strategy::FullyDecoupled;
    if (s == "slowest-first") return Strategy::SlowestFirst;
    if (s == "fastest-first") return Strategy::FastestFirst;
    return std::nullopt;
}

enum class SchemeId { ExplicitEuler, Heun, Rk4, ImplicitEuler };

/// A base one-step scheme with its classical order and the order of the
/// continuous extension it can provide.
struct SchemeSpec {
    SchemeId id = SchemeId::ExplicitEuler;
    int order = 1;
    int dense_output_order = 1;
    bool implicit = false;

    [[nodiscard]] static SchemeSpec make(SchemeId id) {
        switch (id) {
            case SchemeId::ExplicitEuler: return {id, 1, 1, false};
            case SchemeId::Heun: return {id, 2, 2, false};
            case SchemeId::Rk4: return {id, 4, 3, false};
            case SchemeId::ImplicitEuler: return {id, 1, 1, true};
        }
        throw validation_error("unknown scheme id");
    }

    [[nodiscard]] static std::optional<SchemeSpec> from_name(const std::string& name) {
        if (name == "explicit-euler" || name == "euler") return make(SchemeId::ExplicitEuler);
        if (name == "heun") return make(SchemeId::Heun);
        if (name == "rk4") return make(SchemeId::Rk4);
        if (name == "implicit-euler") return make(SchemeId::ImplicitEuler);
        return std::nullopt;
    }

    [[nodiscard]] std::string name() const {
        switch (id) {
            case SchemeId::ExplicitEuler: return "explicit-euler";
            case SchemeId::Heun: return "heun";
            case SchemeId::Rk4: return "rk4";
            case SchemeId::ImplicitEuler: return "implicit-euler";
        }
        return "?";
    }
};

// ---------------------------------------------------------------------------
// Problems
// ---------------------------------------------------------------------------

/// Component-wise partitioned ODE. The right-hand sides must be pure:
/// identical arguments yield identical values (they may be called from
/// several threads and in repeated sweeps).
struct PartitionedOde {
    std::size_t dim_slow = 0;
    std::size_t dim_fast = 0;
    std::function<Vec(double t, const Vec& y_slow, const Vec& y_fast)> f_slow;
    std::function<Vec(double t, const Vec& y_slow, const Vec& y_fast)> f_fast;
    Vec y_slow0;
    Vec y_fast0;
    double t0 = 0.0;
    double t_end = 1.0;

    /// When set, drivers integrate the coupled system monolithically with the
    /// micro step (no extrapolated coupling). Used for oracle references.
    bool single_rate = false;

    void validate() const {
        std::vector<std::string> bad;
        if (dim_slow < 1) bad.push_back("dim_slow must be >= 1");
        if (dim_fast < 1) bad.push_back("dim_fast must be >= 1");
        if (!(t0 < t_end)) bad.push_back("t0 must be < t_end");
        if (!f_slow) bad.push_back("f_slow missing");
        if (!f_fast) bad.push_back("f_fast missing");
        if (y_slow0.size() != dim_slow) bad.push_back("y_slow0 size != dim_slow");
        if (y_fast0.size() != dim_fast) bad.push_back("y_fast0 size != dim_fast");
        if (!bad.empty()) {
            std::string msg = "invalid problem:";
            for (const auto& b : bad) msg += "\n  - " + b;
            throw validation_error(msg);
        }
    }
};

/// Semi-explicit partitioned DAE. Either algebraic dimension may be zero,
/// in which case the corresponding constraint function may be empty.
struct PartitionedDae {
    std::size_t dim_slow = 0;
    std::size_t dim_fast = 0;
    std::size_t dim_zslow = 0;
    std::size_t dim_zfast = 0;
    std::function<Vec(double, const Vec& yS, const Vec& yF, const Vec& zS, const Vec& zF)> f_slow;
    std::function<Vec(double, const Vec& yS, const Vec& yF, const Vec& zS, const Vec& zF)> f_fast;
    std::function<Vec(double, const Vec& yS, const Vec& yF, const Vec& zS, const Vec& zF)> g_slow;
    std::function<Vec(double, const Vec& yS, const Vec& yF, const Vec& zS, const Vec& zF)> g_fast;
    Vec y_slow0;
    Vec y_fast0;
    Vec z_slow0;  // initial guesses, made consistent by consistent_initialize
    Vec z_fast0;
    double t0 = 0.0;
    double t_end = 1.0;
    bool single_rate = false;

    /// Cap for the condition estimate of the algebraic Jacobians at t0.
    double jacobian_cond_cap = 1e12;
    /// Residual tolerance for consistent initial data.
    double consistency_tol = 1e-9;

    void validate() const {
        std::vector<std::string> bad;
        if (dim_slow < 1) bad.push_back("dim_slow must be >= 1");
        if (dim_fast < 1) bad.push_back("dim_fast must be >= 1");
        if (!(t0 < t_end)) bad.push_back("t0 must be < t_end");
        if (!f_slow) bad.push_back("f_slow missing");
        if (!f_fast) bad.push_back("f_fast missing");
        if (dim_zslow > 0 && !g_slow) bad.push_back("g_slow missing");
        if (dim_zfast > 0 && !g_fast) bad.push_back("g_fast missing");
        if (y_slow0.size() != dim_slow) bad.push_back("y_slow0 size != dim_slow");
        if (y_fast0.size() != dim_fast) bad.push_back("y_fast0 size != dim_fast");
        if (z_slow0.size() != dim_zslow) bad.push_back("z_slow0 size != dim_zslow");
        if (z_fast0.size() != dim_zfast) bad.push_back("z_fast0 size != dim_zfast");
        if (!bad.empty()) {
            std::string msg = "invalid problem:";
            for (const auto& b : bad) msg += "\n  - " + b;
            throw validation_error(msg);
        }
    }
};

// ---------------------------------------------------------------------------
// Plans and macro windows
// ---------------------------------------------------------------------------

/// Everything a driver needs to advance one macro window.
struct MacroStepPlan {
    double H = 0.1;
    int m = 1;
    Strategy strategy = Strategy::FullyDecoupled;
    SchemeSpec scheme_slow = SchemeSpec::make(SchemeId::ExplicitEuler);
    SchemeSpec scheme_fast = SchemeSpec::make(SchemeId::ExplicitEuler);
    int extrap_order = 0;
    int interp_order = 0;
    int k = 1;  // dynamic-iteration sweeps per window (DAE path; ODE path uses 1)

    [[nodiscard]] double h() const { return H / m; }
};

namespace detail {

inline void check_plan_common(const MacroStepPlan& plan, std::vector<std::string>& bad) {
    if (plan.m < 1) bad.push_back("multirate factor must be >= 1");
    if (!(plan.H > 0.0)) bad.push_back("macro step H must be > 0");
    if (plan.k < 1) bad.push_back("iteration count k must be >= 1");
    if (plan.extrap_order < 0) bad.push_back("extrap_order must be >= 0");
    if (plan.interp_order < 0) bad.push_back("interp_order must be >= 0");
    if (plan.extrap_order > 2)
        bad.push_back("extrap_order > 2 is not supported by the drivers");
    if (plan.extrap_order == 2 && plan.scheme_slow.dense_output_order < 2)
        bad.push_back("extrap_order 2 requires a slow scheme with dense output of order >= 2");
    switch (plan.strategy) {
        case Strategy::SlowestFirst:
            if (plan.interp_order >= 2 && plan.scheme_slow.dense_output_order < plan.interp_order)
                bad.push_back("interp_order >= 2 with slowest-first requires dense output of that order");
            break;
        case Strategy::FastestFirst:
            if (plan.interp_order > plan.m)
                bad.push_back("interp_order must be <= m for fastest-first (micro nodes)");
            break;
        case Strategy::FullyDecoupled:
            break;
    }
}

}  // namespace detail

/// Check a plan against an ODE problem. Returns the plan unchanged on
/// success; throws a validation_error listing every violated field.
inline MacroStepPlan validate_plan(MacroStepPlan plan, const PartitionedOde& problem) {
    problem.validate();
    std::vector<std::string> bad;
    detail::check_plan_common(plan, bad);
    if (!bad.empty()) {
        std::string msg = "invalid plan:";
        for (const auto& b : bad) msg += "\n  - " + b;
        throw validation_error(msg);
    }
    return plan;
}

/// DAE variant; additionally requires implicit Euler on both subsystems.
inline MacroStepPlan validate_plan(MacroStepPlan plan, const PartitionedDae& problem) {
    problem.validate();
    std::vector<std::string> bad;
    detail::check_plan_common(plan, bad);
    if (plan.scheme_slow.id != SchemeId::ImplicitEuler)
        bad.push_back("DAE path requires implicit-euler as slow scheme");
    if (plan.scheme_fast.id != SchemeId::ImplicitEuler)
        bad.push_back("DAE path requires implicit-euler as fast scheme");
    if (!bad.empty()) {
        std::string msg = "invalid plan:";
        for (const auto& b : bad) msg += "\n  - " + b;
        throw validation_error(msg);
    }
    return plan;
}

/// One macro window [t_begin, t_end] with its micro step. The final window
/// of a horizon may be shorter than H; its micro count stays m with h
/// scaled down accordingly.
struct MacroWindow {
    double t_begin = 0.0;
    double t_end = 0.0;
    int m = 1;

    [[nodiscard]] double length() const { return t_end - t_begin; }
    [[nodiscard]] double h() const { return (t_end - t_begin) / m; }
};

/// Tile [t0, t_end] with macro windows of size H; the last window is
/// shortened to hit t_end exactly.
[[nodiscard]] inline std::vector<MacroWindow> macro_windows(double t0, double t_end, double H,
                                                            int m) {
    if (!(H > 0.0) || !(t_end > t0)) throw validation_error("macro_windows: need H > 0, t_end > t0");
    const double span = t_end - t0;
    // Count full windows; a remainder below a few ulps of the horizon is
    // treated as an exact multiple.
    const double ratio = span / H;
    std::size_t full = static_cast<std::size_t>(std::floor(ratio + 1e-9));
    if (full == 0) full = 0;
    std::vector<MacroWindow> out;
    double t = t0;
    for (std::size_t i = 1; i <= full; ++i) {
        double next = t0 + static_cast<double>(i) * H;
        if (next > t_end) next = t_end;
        if (next <= t) break;
        out.push_back({t, next, m});
        t = next;
    }
    if (t < t_end && (t_end - t) > 1e-12 * std::max(1.0, std::abs(span))) {
        out.push_back({t, t_end, m});
    } else if (!out.empty()) {
        out.back().t_end = t_end;
    } else {
        out.push_back({t0, t_end, m});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Trajectories
// ---------------------------------------------------------------------------

/// Numerical solution on the macro grid (slow part) and the micro grid
/// (fast part). For DAEs the algebraic states follow the same grids.
struct Trajectory {
    std::vector<double> macro_times;
    std::vector<Vec> slow_states;
    std::vector<double> fast_micro_times;
    std::vector<Vec> fast_states;
    std::vector<Vec> z_slow_states;  // empty for ODE problems
    std::vector<Vec> z_fast_states;
    std::vector<std::string> warnings;

    [[nodiscard]] bool has_algebraic() const {
        return !z_slow_states.empty() || !z_fast_states.empty();
    }
};

/// Check the structural invariants of a trajectory. Used by tests and the
/// CSV reader.
inline void validate_trajectory(const Trajectory& traj, double t0, double t_end) {
    auto fail = [](const std::string& m) { throw validation_error("invalid trajectory: " + m); };
    if (traj.macro_times.empty() || traj.fast_micro_times.empty()) fail("empty grids");
    if (traj.macro_times.front() != t0) fail("macro grid does not start at t0");
    if (traj.macro_times.back() != t_end) fail("macro grid does not end at t_end");
    for (std::size_t i = 1; i < traj.macro_times.size(); ++i)
        if (!(traj.macro_times[i] > traj.macro_times[i - 1])) fail("macro grid not increasing");
    for (std::size_t i = 1; i < traj.fast_micro_times.size(); ++i)
        if (!(traj.fast_micro_times[i] > traj.fast_micro_times[i - 1]))
            fail("micro grid not increasing");
    if (traj.slow_states.size() != traj.macro_times.size()) fail("slow state count mismatch");
    if (traj.fast_states.size() != traj.fast_micro_times.size()) fail("fast state count mismatch");
    if (!traj.z_slow_states.empty() && traj.z_slow_states.size() != traj.macro_times.size())
        fail("z_slow state count mismatch");
    if (!traj.z_fast_states.empty() && traj.z_fast_states.size() != traj.fast_micro_times.size())
        fail("z_fast state count mismatch");
    // every macro node appears among the micro nodes
    std::size_t j = 0;
    for (double tm : traj.macro_times) {
        while (j < traj.fast_micro_times.size() && traj.fast_micro_times[j] < tm) ++j;
        if (j >= traj.fast_micro_times.size() || traj.fast_micro_times[j] != tm)
            fail("macro node missing from micro grid");
    }
}

/// Flag a problem so drivers integrate it monolithically at the micro step.
/// Idempotent; used to build oracle references.
[[nodiscard]] inline PartitionedOde lift_single_rate(PartitionedOde ode) {
    ode.validate();
    ode.single_rate = true;
    return ode;
}

[[nodiscard]] inline PartitionedDae lift_single_rate(PartitionedDae dae) {
    dae.validate();
    dae.single_rate = true;
    return dae;
}

}  // namespace multirate
