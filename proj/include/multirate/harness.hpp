#pragma once

// Convergence-order studies, stability sweeps and the CSV formats used by
// the CLI. Errors are sup norms of absolute endpoint differences against
// the problem's oracle reference; observed orders are least-squares slopes
// of log error versus log H over the asymptotic window (by default all
// rungs except the largest H).

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "multirate/contraction.hpp"
#include "multirate/core.hpp"
#include "multirate/dae_multirate.hpp"
#include "multirate/ode_multirate.hpp"
#include "multirate/problems.hpp"
#include "multirate/waveform.hpp"

namespace multirate {

namespace detail {

inline std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Slope fitting
// ---------------------------------------------------------------------------

struct SlopeFit {
    std::optional<double> slope;  // absent when the data is exact
    bool exact = false;

    [[nodiscard]] std::string to_string() const {
        if (exact) return "exact";
        if (!slope) return "n/a";
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4f", *slope);
        return buf;
    }
};

/// Least-squares slope of log(err) against log(H). All errors at or below
/// 1e-15 are reported as the "exact" sentinel.
[[nodiscard]] inline SlopeFit fit_loglog_slope(const std::vector<double>& H,
                                               const std::vector<double>& err) {
    if (H.size() != err.size() || H.size() < 2)
        throw validation_error("fit_loglog_slope: need >= 2 matching samples");
    bool all_exact = true;
    for (double e : err)
        if (e > 1e-15) all_exact = false;
    if (all_exact) return {std::nullopt, true};
    const std::size_t n = H.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = std::log(H[i]);
        const double y = std::log(std::max(err[i], 1e-300));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double denom = n * sxx - sx * sx;
    return {(n * sxy - sx * sy) / denom, false};
}

/// Geometric ladder of step sizes: H0, H0/2, ..., `rungs` values.
[[nodiscard]] inline std::vector<double> default_h_ladder(double H0, int rungs = 5) {
    std::vector<double> out;
    for (int j = 0; j < rungs; ++j) out.push_back(H0 / std::pow(2.0, j));
    return out;
}

// ---------------------------------------------------------------------------
// Convergence studies
// ---------------------------------------------------------------------------

struct ConvergenceSample {
    double H = 0.0;
    double error_slow = 0.0;
    double error_fast = 0.0;
    double error_total = 0.0;
    std::optional<double> error_zslow;
    std::optional<double> error_zfast;
};

struct ConvergenceReport {
    std::vector<ConvergenceSample> samples;
    std::size_t fit_begin = 1;  // asymptotic window [fit_begin, samples.size())
    SlopeFit slope_slow, slope_fast, slope_total;
    SlopeFit slope_differential;  // max of slow/fast columns
    std::optional<SlopeFit> slope_algebraic;

    [[nodiscard]] std::string to_csv() const {
        const bool has_z = !samples.empty() && samples.front().error_zslow.has_value();
        std::ostringstream os;
        os << "H,error_slow,error_fast,error_total";
        if (has_z) os << ",error_zslow,error_zfast";
        os << "\n";
        for (const auto& s : samples) {
            os << detail::fmt17(s.H) << ',' << detail::fmt17(s.error_slow) << ','
               << detail::fmt17(s.error_fast) << ',' << detail::fmt17(s.error_total);
            if (has_z)
                os << ',' << detail::fmt17(s.error_zslow.value_or(0.0)) << ','
                   << detail::fmt17(s.error_zfast.value_or(0.0));
            os << "\n";
        }
        return os.str();
    }

    [[nodiscard]] std::string slopes_text() const {
        std::ostringstream os;
        os << "slope_slow=" << slope_slow.to_string() << "\n";
        os << "slope_fast=" << slope_fast.to_string() << "\n";
        os << "slope_total=" << slope_total.to_string() << "\n";
        os << "slope_differential=" << slope_differential.to_string() << "\n";
        if (slope_algebraic) os << "slope_algebraic=" << slope_algebraic->to_string() << "\n";
        return os.str();
    }
};

namespace detail {

inline double sup_err(const Vec& a, const Vec& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace detail

/// Run the plan over the ladder of macro steps and fit observed orders of
/// the endpoint errors against the entry's reference.
[[nodiscard]] inline ConvergenceReport convergence_study(const CatalogEntry& entry,
                                                         MacroStepPlan plan_template,
                                                         const std::vector<double>& H_list) {
    if (H_list.size() < 4)
        throw validation_error("convergence study: >= 4 step sizes required");
    for (std::size_t i = 1; i < H_list.size(); ++i)
        if (!(H_list[i] < H_list[i - 1]))
            throw validation_error("convergence study: step sizes must be strictly decreasing");

    const double t_star = entry.t_end();
    RefState ref = entry.reference(t_star);
    ConvergenceReport rep;
    for (double H : H_list) {
        MacroStepPlan plan = plan_template;
        plan.H = H;
        ConvergenceSample s;
        s.H = H;
        try {
            if (entry.is_dae()) {
                Trajectory traj = integrate_dae(*entry.dae, plan);
                s.error_slow = detail::sup_err(traj.slow_states.back(), ref.y_slow);
                s.error_fast = detail::sup_err(traj.fast_states.back(), ref.y_fast);
                s.error_zslow = detail::sup_err(traj.z_slow_states.back(), ref.z_slow);
                s.error_zfast = detail::sup_err(traj.z_fast_states.back(), ref.z_fast);
                s.error_total = std::max({s.error_slow, s.error_fast, *s.error_zslow,
                                          *s.error_zfast});
            } else {
                Trajectory traj = integrate(*entry.ode, plan);
                s.error_slow = detail::sup_err(traj.slow_states.back(), ref.y_slow);
                s.error_fast = detail::sup_err(traj.fast_states.back(), ref.y_fast);
                s.error_total = std::max(s.error_slow, s.error_fast);
            }
        } catch (const numerical_error& e) {
            throw numerical_error("convergence study failed at H=" + detail::fmt17(H) + ": " +
                                      e.what(),
                                  e.t(), e.residual());
        }
        rep.samples.push_back(s);
    }

    rep.fit_begin = 1;  // drop the largest H
    std::vector<double> hs, es, ef, et, ed, ez;
    for (std::size_t i = rep.fit_begin; i < rep.samples.size(); ++i) {
        const auto& s = rep.samples[i];
        hs.push_back(s.H);
        es.push_back(s.error_slow);
        ef.push_back(s.error_fast);
        et.push_back(s.error_total);
        ed.push_back(std::max(s.error_slow, s.error_fast));
        if (s.error_zslow)
            ez.push_back(std::max(s.error_zslow.value_or(0.0), s.error_zfast.value_or(0.0)));
    }
    rep.slope_slow = fit_loglog_slope(hs, es);
    rep.slope_fast = fit_loglog_slope(hs, ef);
    rep.slope_total = fit_loglog_slope(hs, et);
    rep.slope_differential = fit_loglog_slope(hs, ed);
    if (!ez.empty()) rep.slope_algebraic = fit_loglog_slope(hs, ez);
    return rep;
}

[[nodiscard]] inline ConvergenceReport convergence_study(const std::string& problem_id,
                                                         const MacroStepPlan& plan_template,
                                                         const std::vector<double>& H_list) {
    return convergence_study(make_problem(problem_id), plan_template, H_list);
}

/// Run a p=2 scheme with order-0 extrapolation; the coupling error then
/// caps the observed order near 1 on coupled problems.
[[nodiscard]] inline ConvergenceReport order_degradation_probe(const CatalogEntry& entry,
                                                               SchemeSpec scheme, int m,
                                                               const std::vector<double>& H_list) {
    MacroStepPlan plan;
    plan.strategy = Strategy::FullyDecoupled;
    plan.scheme_slow = scheme;
    plan.scheme_fast = scheme;
    plan.m = m;
    plan.extrap_order = 0;
    plan.interp_order = 0;
    return convergence_study(entry, plan, H_list);
}

// ---------------------------------------------------------------------------
// Stability sweep
// ---------------------------------------------------------------------------

struct SweepCell {
    double b = 0.0;
    double d = 0.0;
    double alpha_S = 0.0;
    double alpha_F = 0.0;
    double growth = 0.0;  // geometric-mean per-window error growth factor
    bool diverged = false;
    bool verdict_pass = false;
    bool agree = false;
};

/// Growth-factor threshold separating "observed stable" from "observed
/// growing" when flagging analyzer agreement.
inline constexpr double kSweepGrowthThreshold = 1.05;

/// Per grid point: run `windows` macro windows forced (no gate), measure the
/// per-window error growth factor against the reference, and compare with
/// the analyzer verdict. Runs that blow up are recorded as diverged.
[[nodiscard]] inline std::vector<SweepCell> stability_sweep(const std::string& dae_id,
                                                            const std::vector<double>& b_values,
                                                            const std::vector<double>& d_values,
                                                            Strategy strategy, int k, double H,
                                                            int m, int extrap_order = 0,
                                                            int windows = 20) {
    if (dae_id != "dae-lin")
        throw validation_error("stability_sweep expects the dae-lin problem");
    const double lphi = extrapolation_lphi(extrap_order);
    std::vector<SweepCell> out;
    for (double b : b_values) {
        for (double d : d_values) {
            SweepCell cell;
            cell.b = b;
            cell.d = d;
            CatalogEntry entry;
            try {
                entry = make_problem("dae-lin", {{"a", 1.0},
                                                 {"b", b},
                                                 {"c", 1.0},
                                                 {"d", d},
                                                 {"t_end", windows * H}});
            } catch (const validation_error&) {
                cell.diverged = true;
                cell.growth = std::numeric_limits<double>::quiet_NaN();
                out.push_back(cell);
                continue;
            }
            ContractionReport report = build_contraction_report(
                *entry.dae, default_contraction_samples(*entry.dae), lphi);
            cell.alpha_S = report.alpha_S;
            cell.alpha_F = report.alpha_F;
            cell.verdict_pass = report.verdicts.at(strategy).pass;

            MacroStepPlan plan;
            plan.strategy = strategy;
            plan.scheme_slow = SchemeSpec::make(SchemeId::ImplicitEuler);
            plan.scheme_fast = SchemeSpec::make(SchemeId::ImplicitEuler);
            plan.H = H;
            plan.m = m;
            plan.k = k;
            plan.extrap_order = extrap_order;
            try {
                Trajectory traj = integrate_dae(*entry.dae, plan);
                std::vector<double> errs;
                for (std::size_t i = 1; i < traj.macro_times.size(); ++i) {
                    RefState ref = entry.reference(traj.macro_times[i]);
                    double e = detail::sup_err(traj.slow_states[i], ref.y_slow);
                    e = std::max(e, detail::sup_err(traj.z_slow_states[i], ref.z_slow));
                    errs.push_back(e);
                }
                bool finite = true;
                for (double e : errs)
                    if (!std::isfinite(e)) finite = false;
                if (!finite || errs.size() < 2) {
                    cell.diverged = true;
                    cell.growth = std::numeric_limits<double>::infinity();
                } else {
                    // skip the initial accumulation phase; asymptotic
                    // per-window growth is what the verdict is about
                    const std::size_t first = errs.size() > 7 ? 4 : 0;
                    cell.growth =
                        std::pow(errs.back() / std::max(errs[first], 1e-300),
                                 1.0 / static_cast<double>(errs.size() - 1 - first));
                }
            } catch (const numerical_error&) {
                cell.diverged = true;
                cell.growth = std::numeric_limits<double>::infinity();
            }
            const bool observed_stable = !cell.diverged && cell.growth <= kSweepGrowthThreshold;
            cell.agree = (observed_stable == cell.verdict_pass);
            out.push_back(cell);
        }
    }
    return out;
}

[[nodiscard]] inline std::string sweep_to_csv(const std::vector<SweepCell>& cells) {
    std::ostringstream os;
    os << "b,d,alpha_S,alpha_F,growth,diverged,verdict,agree\n";
    for (const auto& c : cells) {
        os << detail::fmt17(c.b) << ',' << detail::fmt17(c.d) << ',' << detail::fmt17(c.alpha_S)
           << ',' << detail::fmt17(c.alpha_F) << ',' << detail::fmt17(c.growth) << ','
           << (c.diverged ? 1 : 0) << ',' << (c.verdict_pass ? "pass" : "fail") << ','
           << (c.agree ? 1 : 0) << "\n";
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Trajectory CSV
// ---------------------------------------------------------------------------

/// Columns: t, y_S..., y_F..., z_S..., z_F... (z only for DAE runs), one row
/// per micro node, 17 significant digits. Slow-grid cells are empty on rows
/// whose time is not a macro node.
inline void emit_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    const std::size_t ns = traj.slow_states.front().size();
    const std::size_t nf = traj.fast_states.front().size();
    const std::size_t nzs = traj.z_slow_states.empty() ? 0 : traj.z_slow_states.front().size();
    const std::size_t nzf = traj.z_fast_states.empty() ? 0 : traj.z_fast_states.front().size();
    os << "t";
    for (std::size_t i = 0; i < ns; ++i) os << ",y_S[" << i << "]";
    for (std::size_t i = 0; i < nf; ++i) os << ",y_F[" << i << "]";
    for (std::size_t i = 0; i < nzs; ++i) os << ",z_S[" << i << "]";
    for (std::size_t i = 0; i < nzf; ++i) os << ",z_F[" << i << "]";
    os << "\n";
    std::size_t macro_idx = 0;
    for (std::size_t row = 0; row < traj.fast_micro_times.size(); ++row) {
        const double t = traj.fast_micro_times[row];
        const bool is_macro =
            macro_idx < traj.macro_times.size() && traj.macro_times[macro_idx] == t;
        os << detail::fmt17(t);
        for (std::size_t i = 0; i < ns; ++i) {
            os << ',';
            if (is_macro) os << detail::fmt17(traj.slow_states[macro_idx][i]);
        }
        for (std::size_t i = 0; i < nf; ++i) os << ',' << detail::fmt17(traj.fast_states[row][i]);
        for (std::size_t i = 0; i < nzs; ++i) {
            os << ',';
            if (is_macro) os << detail::fmt17(traj.z_slow_states[macro_idx][i]);
        }
        for (std::size_t i = 0; i < nzf; ++i)
            os << ',' << detail::fmt17(traj.z_fast_states[row][i]);
        os << "\n";
        if (is_macro) ++macro_idx;
    }
}

/// Inverse of emit_trajectory_csv: parse(emit(traj)) == traj exactly.
[[nodiscard]] inline Trajectory parse_trajectory_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw validation_error("trajectory CSV: empty input");
    std::size_t ns = 0, nf = 0, nzs = 0, nzf = 0;
    {
        std::istringstream hs(line);
        std::string col;
        bool first = true;
        while (std::getline(hs, col, ',')) {
            if (first) {
                if (col != "t") throw validation_error("trajectory CSV: first column must be t");
                first = false;
                continue;
            }
            if (col.rfind("y_S[", 0) == 0) ++ns;
            else if (col.rfind("y_F[", 0) == 0) ++nf;
            else if (col.rfind("z_S[", 0) == 0) ++nzs;
            else if (col.rfind("z_F[", 0) == 0) ++nzf;
            else throw validation_error("trajectory CSV: unknown column " + col);
        }
        if (nf == 0) throw validation_error("trajectory CSV: no fast columns");
    }
    Trajectory traj;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        // a trailing empty cell is not produced by getline; pad if needed
        while (cells.size() < 1 + ns + nf + nzs + nzf) cells.push_back("");
        if (cells.size() != 1 + ns + nf + nzs + nzf)
            throw validation_error("trajectory CSV: wrong cell count on line " +
                                   std::to_string(line_no));
        auto num = [&](const std::string& s) {
            char* end = nullptr;
            double v = std::strtod(s.c_str(), &end);
            if (end == s.c_str() || *end != '\0')
                throw validation_error("trajectory CSV: bad number '" + s + "' on line " +
                                       std::to_string(line_no));
            return v;
        };
        const double t = num(cells[0]);
        const bool is_macro = !cells[1].empty() || ns == 0;
        std::size_t idx = 1;
        Vec ys;
        for (std::size_t i = 0; i < ns; ++i, ++idx)
            if (is_macro) ys.push_back(num(cells[idx]));
        Vec yf;
        for (std::size_t i = 0; i < nf; ++i, ++idx) yf.push_back(num(cells[idx]));
        Vec zs;
        for (std::size_t i = 0; i < nzs; ++i, ++idx)
            if (is_macro) zs.push_back(num(cells[idx]));
        Vec zf;
        for (std::size_t i = 0; i < nzf; ++i, ++idx) zf.push_back(num(cells[idx]));
        traj.fast_micro_times.push_back(t);
        traj.fast_states.push_back(std::move(yf));
        if (nzf > 0) traj.z_fast_states.push_back(std::move(zf));
        if (is_macro) {
            traj.macro_times.push_back(t);
            traj.slow_states.push_back(std::move(ys));
            if (nzs > 0) traj.z_slow_states.push_back(std::move(zs));
        }
    }
    if (traj.fast_micro_times.empty()) throw validation_error("trajectory CSV: no data rows");
    return traj;
}

}  // namespace multirate
