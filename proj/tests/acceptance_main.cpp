// Acceptance suite: every criterion below runs at its stated tolerance and
// prints one pass/fail line. The process exits nonzero if any criterion
// fails.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "multirate/cli.hpp"
#include "multirate/multirate.hpp"

using namespace multirate;

namespace {

int g_failures = 0;

void report(int n, const std::string& label, bool pass, const std::string& detail) {
    std::printf("[%s] %2d  %-34s %s\n", pass ? "PASS" : "FAIL", n, label.c_str(),
                detail.c_str());
    if (!pass) ++g_failures;
}

void run_criterion(int n, const std::string& label,
                   const std::function<std::pair<bool, std::string>()>& body) {
    try {
        auto [pass, detail] = body();
        report(n, label, pass, detail);
    } catch (const std::exception& e) {
        report(n, label, false, std::string("exception: ") + e.what());
    }
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

MacroStepPlan plan_of(Strategy strat, SchemeId scheme, double H, int m, int extrap, int interp,
                      int k = 1) {
    MacroStepPlan plan;
    plan.strategy = strat;
    plan.scheme_slow = SchemeSpec::make(scheme);
    plan.scheme_fast = SchemeSpec::make(scheme);
    plan.H = H;
    plan.m = m;
    plan.extrap_order = extrap;
    plan.interp_order = interp;
    plan.k = k;
    return plan;
}

const std::vector<Strategy> kStrategies{Strategy::FullyDecoupled, Strategy::SlowestFirst,
                                        Strategy::FastestFirst};

// per-window endpoint errors of a dae-lin co-simulation run
std::vector<double> window_errors(double b, double d, Strategy strat, double H, int m,
                                  int windows) {
    CatalogEntry entry =
        make_problem("dae-lin", {{"b", b}, {"d", d}, {"t_end", windows * H}});
    Trajectory traj = integrate_dae(*entry.dae, plan_of(strat, SchemeId::ImplicitEuler, H, m, 0, 0));
    std::vector<double> errs;
    for (std::size_t i = 1; i < traj.macro_times.size(); ++i) {
        RefState ref = entry.reference(traj.macro_times[i]);
        double e = std::abs(traj.slow_states[i][0] - ref.y_slow[0]);
        e = std::max(e, std::abs(traj.z_slow_states[i][0] - ref.z_slow[0]));
        errs.push_back(e);
    }
    return errs;
}

}  // namespace

int main() {
    std::printf("acceptance suite\n----------------\n");

    run_criterion(1, "order-1 multirate", []() {
        ConvergenceReport rep = convergence_study(
            make_problem("lin2"), plan_of(Strategy::FullyDecoupled, SchemeId::ExplicitEuler,
                                          0.1, 4, 0, 0),
            default_h_ladder(0.1));
        const double s = rep.slope_total.slope.value();
        return std::pair{s >= 0.8 && s <= 1.3, "slope=" + fmt(s) + " in [0.8, 1.3]"};
    });

    run_criterion(2, "order-2 multirate, all strategies", []() {
        bool pass = true;
        std::string detail;
        CatalogEntry entry = make_problem("lin2");
        for (Strategy strat : kStrategies) {
            for (int m : {2, 5}) {
                ConvergenceReport rep = convergence_study(
                    entry, plan_of(strat, SchemeId::Heun, 0.0125, m, 1, 1),
                    default_h_ladder(0.0125));
                const double s = rep.slope_total.slope.value();
                if (!(s >= 1.8 && s <= 2.3)) pass = false;
                detail += to_string(strat) + "/m" + std::to_string(m) + "=" + fmt(s) + " ";
            }
        }
        return std::pair{pass, detail + "in [1.8, 2.3]"};
    });

    run_criterion(3, "order-4 single-rate sanity", []() {
        CatalogEntry entry;
        entry.id = "exp-decay";
        PartitionedOde p;
        p.dim_slow = 1;
        p.dim_fast = 1;
        p.f_slow = [](double, const Vec& ys, const Vec&) { return Vec{-ys[0]}; };
        p.f_fast = [](double, const Vec&, const Vec& yf) { return Vec{-yf[0]}; };
        p.y_slow0 = {1.0};
        p.y_fast0 = {1.0};
        p.t_end = 1.0;
        entry.ode = lift_single_rate(p);
        entry.reference = [](double t) {
            return RefState{{std::exp(-t)}, {std::exp(-t)}, {}, {}};
        };
        ConvergenceReport rep = convergence_study(
            entry, plan_of(Strategy::FullyDecoupled, SchemeId::Rk4, 0.1, 1, 0, 0),
            default_h_ladder(0.1));
        const double s = rep.slope_total.slope.value();
        return std::pair{s >= 3.8 && s <= 4.2, "slope=" + fmt(s) + " in [3.8, 4.2]"};
    });

    run_criterion(4, "extrapolation-order necessity", []() {
        ConvergenceReport coupled = order_degradation_probe(
            make_problem("lin2"), SchemeSpec::make(SchemeId::Heun), 2, default_h_ladder(0.1));
        ConvergenceReport decoupled = order_degradation_probe(
            make_problem("lin2", {{"c_sf", 0.0}, {"c_fs", 0.0}}),
            SchemeSpec::make(SchemeId::Heun), 2, default_h_ladder(0.1));
        const double sc = coupled.slope_total.slope.value();
        const double sd = decoupled.slope_total.slope.value();
        return std::pair{sc <= 1.4 && sd >= 1.8,
                         "coupled=" + fmt(sc) + " <= 1.4, decoupled=" + fmt(sd) + " >= 1.8"};
    });

    run_criterion(5, "dense output dominates interp p-1", []() {
        CatalogEntry entry = make_problem("lin2");
        RefState ref = entry.reference(1.0);
        bool pass = true;
        std::string detail;
        for (double H : default_h_ladder(0.0125)) {
            Trajectory lo = integrate(*entry.ode,
                                      plan_of(Strategy::SlowestFirst, SchemeId::Heun, H, 2, 1, 1));
            Trajectory hi = integrate(*entry.ode,
                                      plan_of(Strategy::SlowestFirst, SchemeId::Heun, H, 2, 1, 2));
            const double e_lo = std::abs(lo.fast_states.back()[0] - ref.y_fast[0]);
            const double e_hi = std::abs(hi.fast_states.back()[0] - ref.y_fast[0]);
            if (!(e_hi <= e_lo)) {
                pass = false;
                detail += "H=" + fmt(H) + ": " + fmt(e_hi) + " > " + fmt(e_lo) + " ";
            }
        }
        if (pass) detail = "fast endpoint error with dense output <= interp order 1 at every H";
        return std::pair{pass, detail};
    });

    run_criterion(6, "DAE co-simulation order", []() {
        CatalogEntry entry = make_problem("dae-lin", {{"b", 0.3}, {"d", 0.3}});
        ContractionReport rep = build_contraction_report(
            *entry.dae, default_contraction_samples(*entry.dae), 1.0);
        bool pass = true;
        std::string detail;
        for (Strategy strat : kStrategies) {
            if (!rep.verdicts.at(strat).pass) {
                pass = false;
                detail += to_string(strat) + "=gate-fail ";
                continue;
            }
            ConvergenceReport conv = convergence_study(
                entry, plan_of(strat, SchemeId::ImplicitEuler, 0.1, 2, 0, 0),
                default_h_ladder(0.1));
            const double sd = conv.slope_differential.slope.value();
            const double sa = conv.slope_algebraic.value().slope.value();
            if (!(sd >= 0.8 && sd <= 1.3 && sa >= 0.8 && sa <= 1.3)) pass = false;
            detail += to_string(strat) + "=y:" + fmt(sd) + "/z:" + fmt(sa) + " ";
        }
        return std::pair{pass, detail + "in [0.8, 1.3]"};
    });

    run_criterion(7, "contraction ratios on random (b, d)", []() {
        std::mt19937 rng(20240811);
        std::uniform_real_distribution<double> u(-1.4, 1.4);
        int done = 0;
        double worst = 0.0;
        while (done < 10) {
            const double b = u(rng), d = u(rng);
            if (std::abs(b * d) >= 1.0) continue;
            PartitionedDae p = make_dae_lin(1.0, b, 1.0, d);
            auto [aS, aF] =
                contraction_ratios(estimate_lipschitz(p, default_contraction_samples(p)));
            worst = std::max({worst, std::abs(aS - std::abs(b)), std::abs(aF - std::abs(d))});
            ++done;
        }
        return std::pair{worst <= 1e-8, "max |alpha - |coef|| = " + fmt(worst) + " <= 1e-8"};
    });

    run_criterion(8, "stability verdict truth table", []() {
        const std::vector<double> alphas{0.0, 0.5, 0.99, 1.01, 1.5};
        int checked = 0;
        for (double lphi : {1.0, 3.0}) {
            for (double aS : alphas) {
                for (double aF : alphas) {
                    auto v = stability_verdicts(aS, aF, lphi);
                    const bool fd = aS < 1.0 / lphi && aF < 1.0 / lphi;
                    const bool sf = aS < 1.0 / lphi && aF < 1.0;
                    const bool ff = aF < 1.0 / lphi && aS < 1.0;
                    if (v.at(Strategy::FullyDecoupled).pass != fd ||
                        v.at(Strategy::SlowestFirst).pass != sf ||
                        v.at(Strategy::FastestFirst).pass != ff)
                        return std::pair{false, "mismatch at alpha_S=" + fmt(aS) +
                                                    " alpha_F=" + fmt(aF) +
                                                    " lphi=" + fmt(lphi)};
                    ++checked;
                }
            }
        }
        return std::pair{true, std::to_string(checked) + " combinations match exactly"};
    });

    run_criterion(9, "instability demonstration", []() {
        auto unstable = window_errors(1.5, 1.5, Strategy::FullyDecoupled, 0.05, 2, 20);
        double geo = 1.0;
        for (std::size_t i = 1; i < unstable.size(); ++i) geo *= unstable[i] / unstable[i - 1];
        geo = std::pow(geo, 1.0 / static_cast<double>(unstable.size() - 1));

        auto stable = window_errors(0.3, 0.3, Strategy::FullyDecoupled, 0.05, 2, 20);
        double worst_late = 0.0;
        for (std::size_t i = 6; i < stable.size(); ++i)
            worst_late = std::max(worst_late, stable[i] / stable[i - 1]);
        return std::pair{geo >= 1.2 && worst_late <= 1.02,
                         "unstable growth=" + fmt(geo) + " >= 1.2, stable late growth=" +
                             fmt(worst_late) + " <= 1.02"};
    });

    run_criterion(10, "sweep contraction within one window", []() {
        PartitionedDae p = make_dae_lin(1.0, 0.4, 1.0, 0.4);
        auto [zs, zf] = consistent_initialize(p);
        DaeState s0{p.y_slow0, p.y_fast0, zs, zf};
        DaeWindowResult r = dae_window(
            p, 0.0, s0, plan_of(Strategy::FullyDecoupled, SchemeId::ImplicitEuler, 0.05, 2, 0, 0, 4),
            {});
        auto dev = [&](std::size_t i) {
            const DaeState& a = r.sweep_endpoints[i];
            const DaeState& b = r.sweep_endpoints[i - 1];
            return std::max(
                {std::abs(a.y_slow[0] - b.y_slow[0]), std::abs(a.y_fast[0] - b.y_fast[0]),
                 std::abs(a.z_slow[0] - b.z_slow[0]), std::abs(a.z_fast[0] - b.z_fast[0])});
        };
        const double r21 = dev(2) / dev(1), r32 = dev(3) / dev(2);
        return std::pair{r21 <= 0.55 && r32 <= 0.55,
                         "deviation ratios " + fmt(r21) + ", " + fmt(r32) + " <= 0.55"};
    });

    run_criterion(11, "decoupled equivalence", []() {
        PartitionedOde p = make_lin2(0.0, 0.0);
        const double H = 0.25;
        const int m = 4;
        double worst = 0.0;
        for (SchemeId scheme : {SchemeId::ExplicitEuler, SchemeId::Heun}) {
            // independent single-rate integrations of each subsystem
            const Waveform none = Waveform::constant(-100.0, Vec{}, 1000.0);
            OdeRhs fs = [&p](double t, const Vec& y, const Vec&) {
                return p.f_slow(t, y, {0.0});
            };
            OdeRhs ff = [&p](double t, const Vec& y, const Vec&) {
                return p.f_fast(t, {0.0}, y);
            };
            std::vector<Vec> slow{p.y_slow0}, fast{p.y_fast0};
            for (const auto& win : macro_windows(p.t0, p.t_end, H, m)) {
                slow.push_back(ode_step(SchemeSpec::make(scheme), fs, win.t_begin, slow.back(),
                                        win.length(), none));
                Vec y = fast.back();
                for (int j = 0; j < m; ++j) {
                    const double t = win.t_begin + win.length() * j / m;
                    const double t1 =
                        j + 1 == m ? win.t_end : win.t_begin + win.length() * (j + 1) / m;
                    y = ode_step(SchemeSpec::make(scheme), ff, t, y, t1 - t, none);
                    fast.push_back(y);
                }
            }
            for (Strategy strat : kStrategies) {
                Trajectory traj = integrate(p, plan_of(strat, scheme, H, m, 0, 1));
                for (std::size_t i = 0; i < slow.size(); ++i)
                    worst = std::max(worst, std::abs(traj.slow_states[i][0] - slow[i][0]));
                for (std::size_t i = 0; i < fast.size(); ++i)
                    worst = std::max(worst, std::abs(traj.fast_states[i][0] - fast[i][0]));
            }
        }
        return std::pair{worst <= 1e-13, "max node deviation " + fmt(worst) + " <= 1e-13"};
    });

    run_criterion(12, "determinism and CSV round trip", []() {
        namespace fs = std::filesystem;
        const fs::path out1 = fs::temp_directory_path() / "mr_acc_run1.csv";
        const fs::path out2 = fs::temp_directory_path() / "mr_acc_run2.csv";
        std::vector<std::string> args{"run",  "--problem",      "lin2",
                                      "--strategy", "fastest-first", "--scheme", "heun",
                                      "--H",  "0.05", "--m",  "5",
                                      "--extrap-order", "1", "--interp-order", "1",
                                      "--out", out1.string()};
        if (cli::run(args) != 0) return std::pair{false, std::string("first CLI run failed")};
        args.back() = out2.string();
        if (cli::run(args) != 0) return std::pair{false, std::string("second CLI run failed")};
        auto slurp = [](const fs::path& path) {
            std::ifstream is(path);
            std::stringstream ss;
            ss << is.rdbuf();
            return ss.str();
        };
        const std::string a = slurp(out1), b = slurp(out2);
        if (a.empty() || a != b)
            return std::pair{false, std::string("repeated CLI runs differ")};
        std::istringstream is(a);
        Trajectory traj = parse_trajectory_csv(is);
        std::ostringstream os;
        emit_trajectory_csv(os, traj);
        if (os.str() != a) return std::pair{false, std::string("CSV round trip not identical")};
        return std::pair{true, std::string("byte-identical runs; parse(emit) = identity")};
    });

    std::printf("----------------\n%s (%d criterion failures)\n",
                g_failures == 0 ? "ALL CRITERIA PASSED" : "FAILURES PRESENT", g_failures);
    return g_failures == 0 ? 0 : 1;
}
