#pragma once

// Numerical estimation of the Lipschitz constants of the split DAE and
// evaluation of the per-strategy stability conditions. Constants are
// estimated as induced infinity norms of finite-difference Jacobian blocks,
// maximized over a set of consistent samples; the contraction ratios are
// computed from the normalized products ||(dg/dz_new)^-1 (dg/dz_old)||,
// which reduce to the plain Lipschitz ratios for scalar or unit-diagonal
// constraints. Sampled estimates are lower bounds of the supremum over the
// window; the report says so rather than hiding it.

#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "multirate/core.hpp"
#include "multirate/dae_multirate.hpp"
#include "multirate/linalg.hpp"

namespace multirate {

struct DaeSample {
    double t = 0.0;
    Vec y_slow, y_fast, z_slow, z_fast;
};

/// Estimated Lipschitz constants, indexed [subsystem][argument] with
/// 0 = slow, 1 = fast:
///   Lg[l][r]: g_l with respect to z_r     Mf[l][r]: f_l with respect to y_r
///   Lf[l][r]: f_l with respect to z_r     Mg[l][r]: g_l with respect to y_r
struct LipschitzEstimates {
    double Lg[2][2] = {{0, 0}, {0, 0}};
    double Mf[2][2] = {{0, 0}, {0, 0}};
    double Lf[2][2] = {{0, 0}, {0, 0}};
    double Mg[2][2] = {{0, 0}, {0, 0}};
    double alpha_slow = 0.0;  // max over samples of ||(dgS/dzS)^-1 dgS/dzF||
    double alpha_fast = 0.0;  // max over samples of ||(dgF/dzF)^-1 dgF/dzS||
    std::size_t n_samples = 0;
    std::string sample_spec;
};

namespace detail {

enum : int { kSlow = 0, kFast = 1 };

struct SampleJacobians {
    Mat dg_dz[2][2];  // [subsystem][z argument]
    Mat df_dy[2][2];
    Mat df_dz[2][2];
    Mat dg_dy[2][2];
};

inline SampleJacobians sample_jacobians(const PartitionedDae& p, const DaeSample& s,
                                        double fd_eps) {
    auto call = [&](int sub, bool constraint, const Vec& ys, const Vec& yf, const Vec& zs,
                    const Vec& zf) -> Vec {
        if (constraint)
            return sub == kSlow ? p.g_slow(s.t, ys, yf, zs, zf) : p.g_fast(s.t, ys, yf, zs, zf);
        return sub == kSlow ? p.f_slow(s.t, ys, yf, zs, zf) : p.f_fast(s.t, ys, yf, zs, zf);
    };
    auto block = [&](int sub, bool constraint, int arg_group, int arg_side) -> Mat {
        // arg_group: 0 = y, 1 = z
        const Vec& base = arg_group == 0 ? (arg_side == kSlow ? s.y_slow : s.y_fast)
                                         : (arg_side == kSlow ? s.z_slow : s.z_fast);
        const std::size_t out_dim =
            constraint ? (sub == kSlow ? p.dim_zslow : p.dim_zfast)
                       : (sub == kSlow ? p.dim_slow : p.dim_fast);
        if (base.empty() || out_dim == 0) return Mat(out_dim, base.size());
        auto fn = [&](const Vec& x) {
            Vec ys = s.y_slow, yf = s.y_fast, zs = s.z_slow, zf = s.z_fast;
            if (arg_group == 0) {
                if (arg_side == kSlow) ys = x; else yf = x;
            } else {
                if (arg_side == kSlow) zs = x; else zf = x;
            }
            Vec v = call(sub, constraint, ys, yf, zs, zf);
            for (double c : v)
                if (!std::isfinite(c))
                    throw numerical_error("non-finite function value while sampling Jacobians",
                                          s.t, 0.0);
            return v;
        };
        return fd_jacobian(fn, base, fd_eps);
    };
    SampleJacobians out;
    for (int sub : {kSlow, kFast}) {
        const bool has_g = sub == kSlow ? p.dim_zslow > 0 : p.dim_zfast > 0;
        for (int arg : {kSlow, kFast}) {
            out.df_dy[sub][arg] = block(sub, false, 0, arg);
            out.df_dz[sub][arg] = block(sub, false, 1, arg);
            if (has_g) {
                out.dg_dy[sub][arg] = block(sub, true, 0, arg);
                out.dg_dz[sub][arg] = block(sub, true, 1, arg);
            }
        }
    }
    return out;
}

}  // namespace detail

/// Estimate all Lipschitz blocks and the normalized contraction ratios by
/// maximizing finite-difference Jacobian norms over the samples.
[[nodiscard]] inline LipschitzEstimates estimate_lipschitz(const PartitionedDae& problem,
                                                           const std::vector<DaeSample>& samples,
                                                           double fd_eps = 1e-6) {
    if (samples.empty()) throw validation_error("estimate_lipschitz: samples must be nonempty");
    LipschitzEstimates est;
    est.n_samples = samples.size();
    for (const DaeSample& s : samples) {
        auto jac = detail::sample_jacobians(problem, s, fd_eps);
        for (int sub : {detail::kSlow, detail::kFast}) {
            for (int arg : {detail::kSlow, detail::kFast}) {
                est.Mf[sub][arg] = std::max(est.Mf[sub][arg], inf_norm(jac.df_dy[sub][arg]));
                est.Lf[sub][arg] = std::max(est.Lf[sub][arg], inf_norm(jac.df_dz[sub][arg]));
                est.Mg[sub][arg] = std::max(est.Mg[sub][arg], inf_norm(jac.dg_dy[sub][arg]));
                est.Lg[sub][arg] = std::max(est.Lg[sub][arg], inf_norm(jac.dg_dz[sub][arg]));
            }
        }
        if (problem.dim_zslow > 0 && problem.dim_zfast > 0) {
            Mat xs, xf;
            try {
                xs = lu_solve(jac.dg_dz[detail::kSlow][detail::kSlow],
                              jac.dg_dz[detail::kSlow][detail::kFast]);
                xf = lu_solve(jac.dg_dz[detail::kFast][detail::kFast],
                              jac.dg_dz[detail::kFast][detail::kSlow]);
            } catch (const singular_matrix_error&) {
                throw numerical_error(
                    "contraction ratios: singular constraint Jacobian (index-1 violation) at t=" +
                        std::to_string(s.t),
                    s.t, 0.0);
            }
            est.alpha_slow = std::max(est.alpha_slow, inf_norm(xs));
            est.alpha_fast = std::max(est.alpha_fast, inf_norm(xf));
        }
    }
    return est;
}

/// The ratios of condition a), normalized by the self-coupling Jacobians.
[[nodiscard]] inline std::pair<double, double> contraction_ratios(const LipschitzEstimates& est) {
    return {est.alpha_slow, est.alpha_fast};
}

struct StrategyVerdict {
    bool pass = false;
    std::string failed_condition;  // empty when pass
};

/// Per-strategy sufficient stability conditions (strict inequalities):
///   fully-decoupled: alpha_S < 1/lphi and alpha_F < 1/lphi
///   slowest-first:   alpha_S < 1/lphi and alpha_F < 1
///   fastest-first:   alpha_F < 1/lphi and alpha_S < 1
[[nodiscard]] inline std::map<Strategy, StrategyVerdict> stability_verdicts(double alpha_S,
                                                                            double alpha_F,
                                                                            double lphi) {
    const double inv = 1.0 / lphi;
    std::map<Strategy, StrategyVerdict> out;
    auto check = [](std::initializer_list<std::pair<bool, const char*>> conds) {
        StrategyVerdict v;
        v.pass = true;
        for (const auto& [ok, label] : conds) {
            if (!ok) {
                v.pass = false;
                if (!v.failed_condition.empty()) v.failed_condition += " and ";
                v.failed_condition += label;
            }
        }
        return v;
    };
    out[Strategy::FullyDecoupled] = check({{alpha_S < inv, "alpha_S >= 1/L_phi"},
                                           {alpha_F < inv, "alpha_F >= 1/L_phi"}});
    out[Strategy::SlowestFirst] = check({{alpha_S < inv, "alpha_S >= 1/L_phi"},
                                         {alpha_F < 1.0, "alpha_F >= 1"}});
    out[Strategy::FastestFirst] = check({{alpha_F < inv, "alpha_F >= 1/L_phi"},
                                         {alpha_S < 1.0, "alpha_S >= 1"}});
    return out;
}

struct PropagationCheck {
    bool pass = false;
    /// Smallest sweep count that would pass; absent when no k does.
    std::optional<int> smallest_passing_k;
};

/// Window-to-window stability: lphi * alpha^k < 1.
[[nodiscard]] inline PropagationCheck window_error_propagation_check(double alpha, double lphi,
                                                                     int k) {
    if (k < 1) throw validation_error("window_error_propagation_check: k must be >= 1");
    PropagationCheck out;
    out.pass = lphi * std::pow(alpha, k) < 1.0;
    if (!out.pass) {
        if (alpha < 1.0) {
            int kk = k;
            while (lphi * std::pow(alpha, kk) >= 1.0 && kk < 1000000) ++kk;
            if (lphi * std::pow(alpha, kk) < 1.0) out.smallest_passing_k = kk;
        }
    } else {
        out.smallest_passing_k = k;
    }
    return out;
}

/// Explicit step bounds for DAE-ODE coupling with implicit Euler:
///   H < 1 / (Mf_SS + Lf_SS * Mg_SS),   h < 1 / (Mf_FS + Lf_FS * Mg_SF).
/// Unconstrained (nullopt) when a denominator vanishes. Sufficient bounds;
/// typically pessimistic for stiff problems.
[[nodiscard]] inline std::pair<std::optional<double>, std::optional<double>> suggest_step_bounds(
    const LipschitzEstimates& est) {
    using detail::kFast;
    using detail::kSlow;
    std::optional<double> h_macro, h_micro;
    const double den_H = est.Mf[kSlow][kSlow] + est.Lf[kSlow][kSlow] * est.Mg[kSlow][kSlow];
    const double den_h = est.Mf[kFast][kSlow] + est.Lf[kFast][kSlow] * est.Mg[kSlow][kFast];
    if (den_H > 0.0) h_macro = 1.0 / den_H;
    if (den_h > 0.0) h_micro = 1.0 / den_h;
    return {h_macro, h_micro};
}

struct ContractionReport {
    double alpha_S = 0.0;
    double alpha_F = 0.0;
    double lphi = 1.0;
    std::map<Strategy, StrategyVerdict> verdicts;
    std::optional<double> suggested_H;
    std::optional<double> suggested_h;
    LipschitzEstimates estimates;
    std::string note =
        "sampled estimates are lower bounds of the supremum over the window";

    [[nodiscard]] std::string to_text() const {
        std::ostringstream os;
        os.precision(12);
        os << "# contraction report\n";
        os << "alpha_S=" << alpha_S << "\n";
        os << "alpha_F=" << alpha_F << "\n";
        os << "lphi=" << lphi << "\n";
        for (const auto& [strat, v] : verdicts) {
            os << "verdict." << to_string(strat) << "=" << (v.pass ? "pass" : "fail") << "\n";
            if (!v.pass)
                os << "verdict." << to_string(strat) << ".failed=" << v.failed_condition << "\n";
        }
        os << "suggested_H=";
        if (suggested_H) os << *suggested_H; else os << "unconstrained";
        os << "\n";
        os << "suggested_h=";
        if (suggested_h) os << *suggested_h; else os << "unconstrained";
        os << "\n";
        os << "step_bounds_note=sufficient conditions, typically pessimistic for stiff "
              "problems\n";
        os << "samples=" << estimates.n_samples << "\n";
        os << "note=" << note << "\n";
        os << "\n";
        os << "strategy          condition                                verdict\n";
        os << "----------------  ---------------------------------------  -------\n";
        auto row = [&](Strategy s, const char* cond) {
            const auto& v = verdicts.at(s);
            std::string name = to_string(s);
            name.resize(16, ' ');
            std::string c = cond;
            c.resize(39, ' ');
            os << name << "  " << c << "  " << (v.pass ? "pass" : "fail") << "\n";
        };
        row(Strategy::FullyDecoupled, "alpha_S < 1/L_phi and alpha_F < 1/L_phi");
        row(Strategy::SlowestFirst, "alpha_S < 1/L_phi and alpha_F < 1");
        row(Strategy::FastestFirst, "alpha_F < 1/L_phi and alpha_S < 1");
        return os.str();
    }
};

/// Samples along a coarse single-rate reference trajectory (the closest
/// available stand-in for the analytic solution).
[[nodiscard]] inline std::vector<DaeSample> default_contraction_samples(
    const PartitionedDae& problem, int n_nodes = 9) {
    PartitionedDae ref = problem;
    ref.single_rate = true;
    MacroStepPlan plan;
    plan.H = (problem.t_end - problem.t0) / std::max(1, n_nodes - 1);
    plan.m = 1;
    plan.scheme_slow = SchemeSpec::make(SchemeId::ImplicitEuler);
    plan.scheme_fast = SchemeSpec::make(SchemeId::ImplicitEuler);
    Trajectory traj = integrate_dae(ref, plan);
    std::vector<DaeSample> out;
    for (std::size_t i = 0; i < traj.macro_times.size(); ++i) {
        DaeSample s;
        s.t = traj.macro_times[i];
        s.y_slow = traj.slow_states[i];
        s.z_slow = traj.z_slow_states[i];
        // macro nodes are also micro nodes; locate the matching fast state
        for (std::size_t j = 0; j < traj.fast_micro_times.size(); ++j) {
            if (traj.fast_micro_times[j] == s.t) {
                s.y_fast = traj.fast_states[j];
                s.z_fast = traj.z_fast_states[j];
                break;
            }
        }
        out.push_back(std::move(s));
    }
    return out;
}

[[nodiscard]] inline ContractionReport build_contraction_report(
    const PartitionedDae& problem, const std::vector<DaeSample>& samples, double lphi,
    double fd_eps = 1e-6) {
    ContractionReport rep;
    rep.estimates = estimate_lipschitz(problem, samples, fd_eps);
    auto [aS, aF] = contraction_ratios(rep.estimates);
    rep.alpha_S = aS;
    rep.alpha_F = aF;
    rep.lphi = lphi;
    rep.verdicts = stability_verdicts(aS, aF, lphi);
    auto [bH, bh] = suggest_step_bounds(rep.estimates);
    rep.suggested_H = bH;
    rep.suggested_h = bh;
    return rep;
}

namespace detail {

inline void enforce_gate(const ContractionReport& report, Strategy strategy) {
    const auto it = report.verdicts.find(strategy);
    if (it == report.verdicts.end()) return;
    if (!it->second.pass)
        throw stability_gate_error("stability gate refused " + to_string(strategy) +
                                   ": " + it->second.failed_condition +
                                   " (alpha_S=" + std::to_string(report.alpha_S) +
                                   ", alpha_F=" + std::to_string(report.alpha_F) +
                                   ", L_phi=" + std::to_string(report.lphi) + ")");
}

}  // namespace detail

/// Condition estimates of the constraint Jacobians at the (consistent)
/// initial point; rejects problems violating the index-1 assumptions.
inline void check_dae_index1(const PartitionedDae& problem, double fd_eps = 1e-6) {
    Vec zs, zf;
    try {
        std::tie(zs, zf) = consistent_initialize(problem);
    } catch (const numerical_error& e) {
        throw validation_error(std::string("index-1 violation: consistent initialization "
                                           "failed (") +
                               e.what() + ")");
    }
    DaeSample s{problem.t0, problem.y_slow0, problem.y_fast0, zs, zf};
    auto jac = detail::sample_jacobians(problem, s, fd_eps);
    auto check = [&](const Mat& m, const std::string& name) {
        if (m.rows == 0) return;
        double cond;
        try {
            cond = cond_inf(m);
        } catch (const singular_matrix_error&) {
            throw validation_error("index-1 violation: " + name + " is singular");
        }
        if (!(cond < problem.jacobian_cond_cap))
            throw validation_error("index-1 violation: condition estimate of " + name +
                                   " exceeds the cap");
    };
    check(jac.dg_dz[detail::kSlow][detail::kSlow], "dg_slow/dz_slow");
    check(jac.dg_dz[detail::kFast][detail::kFast], "dg_fast/dz_fast");
    // full algebraic Jacobian
    const std::size_t nzs = problem.dim_zslow, nzf = problem.dim_zfast;
    if (nzs + nzf > 0) {
        Mat full(nzs + nzf, nzs + nzf);
        auto put = [&](const Mat& m, std::size_t r0, std::size_t c0) {
            for (std::size_t i = 0; i < m.rows; ++i)
                for (std::size_t j = 0; j < m.cols; ++j) full(r0 + i, c0 + j) = m(i, j);
        };
        if (nzs > 0) put(jac.dg_dz[detail::kSlow][detail::kSlow], 0, 0);
        if (nzs > 0 && nzf > 0) put(jac.dg_dz[detail::kSlow][detail::kFast], 0, nzs);
        if (nzf > 0 && nzs > 0) put(jac.dg_dz[detail::kFast][detail::kSlow], nzs, 0);
        if (nzf > 0) put(jac.dg_dz[detail::kFast][detail::kFast], nzs, nzs);
        check(full, "full algebraic Jacobian");
    }
}

}  // namespace multirate
