#pragma once

// Time-continuous representations of coupling variables over one macro
// window, together with the extrapolation/interpolation operators that
// build them. Every waveform stores plain node data (never callbacks) and
// carries its declared approximation order and the operator bound lphi:
// the Lipschitz constant of the map from input node data to the sup-norm
// of the output over the evaluation window. For the polynomial kinds lphi
// is the maximum over the window of the absolute Lagrange basis sum,
// located by a 501-point scan with local refinement.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "multirate/core.hpp"
#include "multirate/linalg.hpp"

namespace multirate {

enum class WaveformKind {
    ConstantExtrap,
    LinearExtrap,
    HistoryPolyExtrap,
    NodeInterp,
    DenseOutput,
    PiecewiseLinear,
};

[[nodiscard]] inline std::string to_string(WaveformKind k) {
    switch (k) {
        case WaveformKind::ConstantExtrap: return "constant-extrap";
        case WaveformKind::LinearExtrap: return "linear-extrap";
        case WaveformKind::HistoryPolyExtrap: return "history-poly-extrap";
        case WaveformKind::NodeInterp: return "node-interp";
        case WaveformKind::DenseOutput: return "dense-output";
        case WaveformKind::PiecewiseLinear: return "piecewise-linear";
    }
    return "?";
}

class Waveform {
public:
    Waveform() = default;

    [[nodiscard]] WaveformKind kind() const { return kind_; }
    [[nodiscard]] int order() const { return order_; }
    [[nodiscard]] double lphi() const { return lphi_; }
    [[nodiscard]] double t_begin() const { return t_begin_; }
    [[nodiscard]] double t_end() const { return t_end_; }
    [[nodiscard]] std::size_t dim() const {
        return node_values_.empty() ? 0 : node_values_.front().size();
    }

    /// Evaluate at t; defined for every t in the waveform's window
    /// (a few ulps of slack are tolerated for grid roundoff).
    [[nodiscard]] Vec eval(double t) const {
        check_window(t);
        switch (kind_) {
            case WaveformKind::ConstantExtrap:
                return node_values_.front();
            case WaveformKind::LinearExtrap: {
                Vec out(dim());
                const double dt = t - node_times_.front();
                for (std::size_t c = 0; c < out.size(); ++c)
                    out[c] = node_values_[0][c] + dt * node_slopes_[0][c];
                return out;
            }
            case WaveformKind::HistoryPolyExtrap:
            case WaveformKind::NodeInterp:
                return lagrange_eval(t);
            case WaveformKind::DenseOutput:
                return hermite_eval(t);
            case WaveformKind::PiecewiseLinear:
                return pwl_eval(t);
        }
        throw std::logic_error("unreachable waveform kind");
    }

    /// CSV debug dump: header then `samples` equispaced rows (t, value...).
    void dump_csv(std::ostream& os, int samples = 101) const {
        if (samples < 2) samples = 2;
        os << "t";
        for (std::size_t c = 0; c < dim(); ++c) os << ",v" << c;
        os << "\n";
        char buf[64];
        for (int i = 0; i < samples; ++i) {
            const double t =
                t_begin_ + (t_end_ - t_begin_) * static_cast<double>(i) / (samples - 1);
            Vec v = eval(t);
            std::snprintf(buf, sizeof buf, "%.17g", t);
            os << buf;
            for (double x : v) {
                std::snprintf(buf, sizeof buf, "%.17g", x);
                os << ',' << buf;
            }
            os << "\n";
        }
    }

    // -- constructors -------------------------------------------------------

    /// Order-0 extrapolation: eval(t) = v on [t_bar, t_bar + window_len].
    [[nodiscard]] static Waveform constant(double t_bar, Vec v, double window_len) {
        if (!(window_len > 0.0)) throw validation_error("constant extrapolation: window length must be > 0");
        Waveform w;
        w.kind_ = WaveformKind::ConstantExtrap;
        w.t_begin_ = t_bar;
        w.t_end_ = t_bar + window_len;
        w.node_times_ = {t_bar};
        w.node_values_ = {std::move(v)};
        w.order_ = 0;
        w.lphi_ = 1.0;
        return w;
    }

    /// Order-1 extrapolation: eval(t) = v + (t - t_bar) * slope. Exact on
    /// affine functions. The operator bound uses the equivalent two-node
    /// representation on [t_bar - H, t_bar].
    [[nodiscard]] static Waveform linear(double t_bar, Vec v, Vec slope, double window_len) {
        if (!(window_len > 0.0)) throw validation_error("linear extrapolation: window length must be > 0");
        if (v.size() != slope.size())
            throw validation_error("linear extrapolation: value/slope dimension mismatch");
        Waveform w;
        w.kind_ = WaveformKind::LinearExtrap;
        w.t_begin_ = t_bar;
        w.t_end_ = t_bar + window_len;
        w.node_times_ = {t_bar};
        w.node_values_ = {std::move(v)};
        w.node_slopes_ = {std::move(slope)};
        w.order_ = 1;
        w.lphi_ = max_basis_sum({t_bar - window_len, t_bar}, t_bar, t_bar + window_len);
        return w;
    }

    /// Degree-q polynomial through nodes at or before the window start,
    /// evaluated forward on [window_begin, window_end]. When more than q+1
    /// nodes are supplied the most recent q+1 are used.
    [[nodiscard]] static Waveform history_poly(std::vector<double> times, std::vector<Vec> values,
                                               int q, double window_begin, double window_end) {
        check_nodes(times, values, q, "history extrapolation");
        take_last(times, values, static_cast<std::size_t>(q) + 1);
        const double slack = window_slack(window_begin, window_end);
        for (double t : times)
            if (t > window_begin + slack)
                throw validation_error("history extrapolation: node times must be <= window start");
        Waveform w;
        w.kind_ = WaveformKind::HistoryPolyExtrap;
        w.t_begin_ = window_begin;
        w.t_end_ = window_end;
        w.node_times_ = std::move(times);
        w.node_values_ = std::move(values);
        w.order_ = q;
        w.lphi_ = max_basis_sum(w.node_times_, window_begin, window_end);
        return w;
    }

    /// Degree-q interpolating polynomial through nodes inside the window;
    /// exact on polynomials of degree <= q. When more than q+1 nodes are
    /// supplied the last q+1 are used.
    [[nodiscard]] static Waveform node_interp(std::vector<double> times, std::vector<Vec> values,
                                              int q, double window_begin, double window_end) {
        check_nodes(times, values, q, "node interpolation");
        take_last(times, values, static_cast<std::size_t>(q) + 1);
        Waveform w;
        w.kind_ = WaveformKind::NodeInterp;
        w.t_begin_ = window_begin;
        w.t_end_ = window_end;
        w.node_times_ = std::move(times);
        w.node_values_ = std::move(values);
        w.order_ = q;
        w.lphi_ = max_basis_sum(w.node_times_, window_begin, window_end);
        return w;
    }

    /// Convenience: interpolate through all nodes over their hull.
    [[nodiscard]] static Waveform node_interp(std::vector<double> times, std::vector<Vec> values) {
        const int q = static_cast<int>(times.size()) - 1;
        const double a = times.front(), b = times.back();
        return node_interp(std::move(times), std::move(values), q, a, b);
    }

    /// Cubic Hermite continuous extension of one step (dense output).
    /// `order` is the declared approximation order of the extension.
    [[nodiscard]] static Waveform hermite(double t0, double t1, Vec y0, Vec y1, Vec f0, Vec f1,
                                          int order) {
        if (!(t1 > t0)) throw validation_error("dense output: empty step");
        Waveform w;
        w.kind_ = WaveformKind::DenseOutput;
        w.t_begin_ = t0;
        w.t_end_ = t1;
        w.node_times_ = {t0, t1};
        w.node_values_ = {std::move(y0), std::move(y1)};
        w.node_slopes_ = {std::move(f0), std::move(f1)};
        w.order_ = order;
        w.lphi_ = hermite_basis_bound();
        return w;
    }

    /// Piecewise-linear interpolant through all nodes over their hull.
    /// Robust carrier for previous-iterate data (lphi = 1 for any node count).
    [[nodiscard]] static Waveform piecewise_linear(std::vector<double> times,
                                                   std::vector<Vec> values) {
        if (times.size() < 2) throw validation_error("piecewise linear: need >= 2 nodes");
        check_nodes(times, values, static_cast<int>(times.size()) - 1, "piecewise linear");
        Waveform w;
        w.kind_ = WaveformKind::PiecewiseLinear;
        w.t_begin_ = times.front();
        w.t_end_ = times.back();
        w.node_times_ = std::move(times);
        w.node_values_ = std::move(values);
        w.order_ = 1;
        w.lphi_ = 1.0;
        return w;
    }

private:
    WaveformKind kind_ = WaveformKind::ConstantExtrap;
    double t_begin_ = 0.0;
    double t_end_ = 0.0;
    std::vector<double> node_times_;
    std::vector<Vec> node_values_;
    std::vector<Vec> node_slopes_;
    int order_ = 0;
    double lphi_ = 1.0;

    [[nodiscard]] static double window_slack(double a, double b) {
        return 1e-9 * std::max({1.0, std::abs(a), std::abs(b), b - a});
    }

    void check_window(double t) const {
        const double slack = window_slack(t_begin_, t_end_);
        if (t < t_begin_ - slack || t > t_end_ + slack)
            throw numerical_error("waveform evaluated outside its window", t, 0.0);
    }

    static void check_nodes(const std::vector<double>& times, const std::vector<Vec>& values,
                            int q, const std::string& what) {
        if (q < 0) throw validation_error(what + ": order must be >= 0");
        if (times.size() != values.size())
            throw validation_error(what + ": node time/value count mismatch");
        if (times.size() < static_cast<std::size_t>(q) + 1)
            throw validation_error(what + ": fewer than q+1 nodes");
        for (std::size_t i = 1; i < times.size(); ++i) {
            if (!(times[i] > times[i - 1]))
                throw validation_error(what + ": node times must be strictly increasing");
            if (values[i].size() != values[0].size())
                throw validation_error(what + ": node value dimensions differ");
        }
    }

    static void take_last(std::vector<double>& times, std::vector<Vec>& values, std::size_t n) {
        if (times.size() > n) {
            times.erase(times.begin(), times.end() - static_cast<std::ptrdiff_t>(n));
            values.erase(values.begin(), values.end() - static_cast<std::ptrdiff_t>(n));
        }
    }

    [[nodiscard]] Vec lagrange_eval(double t) const {
        const std::size_t n = node_times_.size();
        Vec out(dim(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double li = 1.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                li *= (t - node_times_[j]) / (node_times_[i] - node_times_[j]);
            }
            for (std::size_t c = 0; c < out.size(); ++c) out[c] += li * node_values_[i][c];
        }
        return out;
    }

    [[nodiscard]] Vec hermite_eval(double t) const {
        const double t0 = node_times_[0], t1 = node_times_[1];
        const double dt = t1 - t0;
        const double th = (t - t0) / dt;
        const double th2 = th * th, th3 = th2 * th;
        const double h00 = 2 * th3 - 3 * th2 + 1;
        const double h01 = -2 * th3 + 3 * th2;
        const double h10 = th3 - 2 * th2 + th;
        const double h11 = th3 - th2;
        Vec out(dim());
        for (std::size_t c = 0; c < out.size(); ++c)
            out[c] = h00 * node_values_[0][c] + h01 * node_values_[1][c] +
                     dt * (h10 * node_slopes_[0][c] + h11 * node_slopes_[1][c]);
        return out;
    }

    [[nodiscard]] Vec pwl_eval(double t) const {
        if (t <= node_times_.front()) return node_values_.front();
        if (t >= node_times_.back()) return node_values_.back();
        auto it = std::upper_bound(node_times_.begin(), node_times_.end(), t);
        const std::size_t hi = static_cast<std::size_t>(it - node_times_.begin());
        const std::size_t lo = hi - 1;
        const double w = (t - node_times_[lo]) / (node_times_[hi] - node_times_[lo]);
        Vec out(dim());
        for (std::size_t c = 0; c < out.size(); ++c)
            out[c] = (1.0 - w) * node_values_[lo][c] + w * node_values_[hi][c];
        return out;
    }

    // Maximum over [a, b] of the absolute Lagrange basis sum for the given
    // node times: 501-point scan, then ternary refinement around the best.
    [[nodiscard]] static double max_basis_sum(const std::vector<double>& nodes, double a,
                                              double b) {
        auto basis_sum = [&nodes](double t) {
            double s = 0.0;
            for (std::size_t i = 0; i < nodes.size(); ++i) {
                double li = 1.0;
                for (std::size_t j = 0; j < nodes.size(); ++j) {
                    if (j == i) continue;
                    li *= (t - nodes[j]) / (nodes[i] - nodes[j]);
                }
                s += std::abs(li);
            }
            return s;
        };
        const int n_scan = 501;
        double best_t = a, best = basis_sum(a);
        for (int i = 1; i < n_scan; ++i) {
            const double t = a + (b - a) * static_cast<double>(i) / (n_scan - 1);
            const double s = basis_sum(t);
            if (s > best) {
                best = s;
                best_t = t;
            }
        }
        const double cell = (b - a) / (n_scan - 1);
        double lo = std::max(a, best_t - cell), hi = std::min(b, best_t + cell);
        for (int it = 0; it < 80; ++it) {
            const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
            if (basis_sum(m1) < basis_sum(m2))
                lo = m1;
            else
                hi = m2;
        }
        return std::max(best, basis_sum(0.5 * (lo + hi)));
    }

    [[nodiscard]] static double hermite_basis_bound() {
        // max over [0,1] of |h00|+|h01|+|h10|+|h11| (slope data pre-scaled
        // by the step length).
        double best = 0.0;
        for (int i = 0; i <= 1000; ++i) {
            const double th = i / 1000.0;
            const double th2 = th * th, th3 = th2 * th;
            const double s = std::abs(2 * th3 - 3 * th2 + 1) + std::abs(-2 * th3 + 3 * th2) +
                             std::abs(th3 - 2 * th2 + th) + std::abs(th3 - th2);
            best = std::max(best, s);
        }
        return best;
    }
};

// -- spec-level operator entry points ---------------------------------------

[[nodiscard]] inline Waveform extrapolate_constant(double t_bar, Vec v, double window_len) {
    return Waveform::constant(t_bar, std::move(v), window_len);
}

[[nodiscard]] inline Waveform extrapolate_linear(double t_bar, Vec v, Vec slope,
                                                 double window_len) {
    return Waveform::linear(t_bar, std::move(v), std::move(slope), window_len);
}

[[nodiscard]] inline Waveform extrapolate_history(std::vector<double> times,
                                                  std::vector<Vec> values, int q,
                                                  double window_begin, double window_end) {
    return Waveform::history_poly(std::move(times), std::move(values), q, window_begin,
                                  window_end);
}

[[nodiscard]] inline Waveform interpolate_nodes(std::vector<double> times, std::vector<Vec> values,
                                                int q, double window_begin, double window_end) {
    return Waveform::node_interp(std::move(times), std::move(values), q, window_begin, window_end);
}

/// The operator bound carried by a waveform.
[[nodiscard]] inline double operator_lphi(const Waveform& w) { return w.lphi(); }

/// Operator bound of the extrapolation the drivers build for a given order:
/// order 0 is the constant operator, orders >= 1 carry previous-window data
/// one window ahead on equispaced nodes.
[[nodiscard]] inline double extrapolation_lphi(int extrap_order) {
    if (extrap_order <= 0) return 1.0;
    std::vector<double> times;
    std::vector<Vec> values;
    for (int i = 0; i <= extrap_order; ++i) {
        times.push_back(-1.0 + static_cast<double>(i) / extrap_order);
        values.push_back(Vec{0.0});
    }
    return Waveform::history_poly(std::move(times), std::move(values), extrap_order, 0.0, 1.0)
        .lphi();
}

}  // namespace multirate
