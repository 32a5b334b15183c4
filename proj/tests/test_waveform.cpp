#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "multirate/waveform.hpp"

using namespace multirate;
using Catch::Approx;

namespace {

double max_err_vs(const Waveform& w, double a, double b, double (*f)(double)) {
    double worst = 0.0;
    const int n = 20000;
    for (int i = 0; i <= n; ++i) {
        const double t = a + (b - a) * i / n;
        worst = std::max(worst, std::abs(w.eval(t)[0] - f(t)));
    }
    return worst;
}

double exp_neg(double t) { return std::exp(-t); }

}  // namespace

TEST_CASE("constant extrapolation", "[waveform]") {
    Waveform w = extrapolate_constant(0.0, {2.0}, 0.1);
    REQUIRE(w.eval(0.05)[0] == 2.0);
    REQUIRE(w.order() == 0);
    REQUIRE(operator_lphi(w) == 1.0);
    REQUIRE_THROWS_AS(extrapolate_constant(0.0, {1.0}, 0.0), validation_error);

    // exact on constants
    const Waveform c = extrapolate_constant(0.0, {0.7}, 1.0);
    for (double t : {0.0, 0.3, 1.0}) REQUIRE(c.eval(t)[0] == 0.7);

    // on exp(-t) over [0, 0.1] the window error peaks at 1 - e^{-0.1}
    Waveform we = extrapolate_constant(0.0, {1.0}, 0.1);
    REQUIRE(max_err_vs(we, 0.0, 0.1, exp_neg) == Approx(0.09516258196404048).epsilon(1e-10));
}

TEST_CASE("linear extrapolation", "[waveform]") {
    Waveform w = extrapolate_linear(0.0, {1.0}, {2.0}, 1.0);
    REQUIRE(w.eval(0.5)[0] == Approx(2.0));
    REQUIRE(w.order() == 1);

    // exact on affine t
    Waveform aff = extrapolate_linear(0.5, {3.0}, {-1.0}, 0.5);
    for (double t : {0.5, 0.75, 1.0}) REQUIRE(aff.eval(t)[0] == Approx(3.0 - (t - 0.5)));

    // on y = t^2 over [0, H]: worst error H^2 at the far end
    Waveform sq = extrapolate_linear(0.0, {0.0}, {0.0}, 0.1);
    double worst = 0.0;
    for (int i = 0; i <= 1000; ++i) {
        const double t = 0.1 * i / 1000.0;
        worst = std::max(worst, std::abs(sq.eval(t)[0] - t * t));
    }
    REQUIRE(worst == Approx(0.01).epsilon(1e-9));

    // on exp(-t) with the slope from the right-hand side at 0
    Waveform we = extrapolate_linear(0.0, {1.0}, {-1.0}, 0.1);
    REQUIRE(max_err_vs(we, 0.0, 0.1, exp_neg) == Approx(0.004837418035959495).epsilon(1e-9));

    REQUIRE_THROWS_AS(extrapolate_linear(0.0, {1.0}, {1.0}, -0.1), validation_error);
}

TEST_CASE("history extrapolation", "[waveform]") {
    // q = 0 degenerates to constant
    Waveform w0 = extrapolate_history({0.0}, {{2.5}}, 0, 0.0, 0.5);
    REQUIRE(w0.eval(0.4)[0] == Approx(2.5));

    // line through (0,0) and (1,1), evaluated ahead on [1, 2]
    Waveform w1 = extrapolate_history({0.0, 1.0}, {{0.0}, {1.0}}, 1, 1.0, 2.0);
    REQUIRE(w1.eval(2.0)[0] == Approx(2.0).margin(1e-13));

    // equispaced nodes one window back give the basis-sum bound 3 at t+H
    REQUIRE(operator_lphi(w1) == Approx(3.0).margin(1e-7));

    REQUIRE_THROWS_AS(extrapolate_history({0.0, 0.0}, {{1.0}, {2.0}}, 1, 0.0, 1.0),
                      validation_error);
    REQUIRE_THROWS_AS(extrapolate_history({0.0}, {{1.0}}, 1, 0.0, 1.0), validation_error);
    // nodes must not lie beyond the window start
    REQUIRE_THROWS_AS(extrapolate_history({0.0, 0.5}, {{1.0}, {2.0}}, 1, 0.2, 1.0),
                      validation_error);
}

TEST_CASE("node interpolation", "[waveform]") {
    Waveform w = interpolate_nodes({0.0, 1.0}, {{1.0}, {3.0}}, 1, 0.0, 1.0);
    REQUIRE(w.eval(0.5)[0] == Approx(2.0));
    REQUIRE(operator_lphi(w) == Approx(1.0).margin(1e-9));

    // polynomial reproduction: a quadratic through 3 of its nodes
    auto quad = [](double t) { return 0.3 * t * t - 1.2 * t + 0.5; };
    Waveform wq = interpolate_nodes({0.0, 0.4, 1.0}, {{quad(0.0)}, {quad(0.4)}, {quad(1.0)}}, 2,
                                    0.0, 1.0);
    for (double t : {0.1, 0.55, 0.95})
        REQUIRE(wq.eval(t)[0] == Approx(quad(t)).margin(1e-12));

    // interpolating exp(-t) at {0, 0.05, 0.1}: frozen dense-sampled maximum
    Waveform we = interpolate_nodes({0.0, 0.05, 0.1},
                                    {{exp_neg(0.0)}, {exp_neg(0.05)}, {exp_neg(0.1)}}, 2, 0.0,
                                    0.1);
    REQUIRE(max_err_vs(we, 0.0, 0.1, exp_neg) == Approx(7.684067203084233e-06).epsilon(0.02));

    REQUIRE_THROWS_AS(interpolate_nodes({0.0, 0.0}, {{1.0}, {1.0}}, 1, 0.0, 1.0),
                      validation_error);
}

TEST_CASE("extra nodes beyond q+1 use the most recent ones", "[waveform]") {
    // four nodes, q = 1: the line through the last two
    Waveform w = interpolate_nodes({0.0, 0.1, 0.2, 0.3}, {{5.0}, {5.0}, {1.0}, {2.0}}, 1, 0.0,
                                   0.3);
    REQUIRE(w.eval(0.3)[0] == Approx(2.0));
    REQUIRE(w.eval(0.25)[0] == Approx(1.5));
}

TEST_CASE("monomial reproduction up to the declared order", "[waveform][property]") {
    for (int q = 0; q <= 3; ++q) {
        std::vector<double> ts;
        std::vector<Vec> history_vs, interp_vs;
        for (int i = 0; i <= q; ++i) ts.push_back(-1.0 + i / std::max(1.0, double(q)));
        for (int j = 0; j <= q; ++j) {
            // history extrapolation on [0, 1]
            history_vs.clear();
            for (double t : ts) history_vs.push_back({std::pow(t, j)});
            Waveform wh = extrapolate_history(ts, history_vs, q, 0.0, 1.0);
            for (double t : {0.0, 0.33, 1.0})
                REQUIRE(wh.eval(t)[0] == Approx(std::pow(t, j)).margin(1e-12));
        }
    }
}

TEST_CASE("waveform operators are linear in the node data", "[waveform][property]") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> ts{0.0, 0.4, 1.0};
        std::vector<Vec> d1, d2, mix;
        const double a = u(rng), b = u(rng);
        for (int i = 0; i < 3; ++i) {
            d1.push_back({u(rng), u(rng)});
            d2.push_back({u(rng), u(rng)});
            mix.push_back({a * d1.back()[0] + b * d2.back()[0],
                           a * d1.back()[1] + b * d2.back()[1]});
        }
        Waveform w1 = interpolate_nodes(ts, d1, 2, 0.0, 1.0);
        Waveform w2 = interpolate_nodes(ts, d2, 2, 0.0, 1.0);
        Waveform wm = interpolate_nodes(ts, mix, 2, 0.0, 1.0);
        const double t = u(rng) * 0.25 + 0.5;
        for (std::size_t c = 0; c < 2; ++c)
            REQUIRE(wm.eval(t)[c] ==
                    Approx(a * w1.eval(t)[c] + b * w2.eval(t)[c]).margin(1e-11));
    }
}

TEST_CASE("lphi bounds the output for arbitrary data", "[waveform][property]") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> ts{-1.0, -0.5, 0.0};
        std::vector<Vec> vs;
        double dmax = 0.0;
        for (int i = 0; i < 3; ++i) {
            vs.push_back({u(rng)});
            dmax = std::max(dmax, std::abs(vs.back()[0]));
        }
        Waveform w = extrapolate_history(ts, vs, 2, 0.0, 1.0);
        const double bound = operator_lphi(w) * dmax;
        for (int i = 0; i <= 100; ++i) {
            const double t = i / 100.0;
            REQUIRE(std::abs(w.eval(t)[0]) <= bound * (1.0 + 1e-9) + 1e-12);
        }
    }
}

TEST_CASE("halving the window scales the error by about 2^(q+1)", "[waveform][property]") {
    // constant extrapolation of exp(-t), q = 0
    auto err_const = [](double H) {
        Waveform w = extrapolate_constant(0.0, {1.0}, H);
        return max_err_vs(w, 0.0, H, exp_neg);
    };
    const double r0 = err_const(0.02) / err_const(0.01);
    REQUIRE(r0 > 2.0 * 0.8);
    REQUIRE(r0 < 2.0 * 1.2);

    // linear extrapolation, q = 1
    auto err_lin = [](double H) {
        Waveform w = extrapolate_linear(0.0, {1.0}, {-1.0}, H);
        return max_err_vs(w, 0.0, H, exp_neg);
    };
    const double r1 = err_lin(0.02) / err_lin(0.01);
    REQUIRE(r1 > 4.0 * 0.8);
    REQUIRE(r1 < 4.0 * 1.2);

    // history extrapolation with q = 2, node spacing tied to the window
    auto err_hist = [](double H) {
        std::vector<double> ts{-2.0 * H, -H, 0.0};
        std::vector<Vec> vs{{exp_neg(ts[0])}, {exp_neg(ts[1])}, {exp_neg(ts[2])}};
        Waveform w = extrapolate_history(ts, vs, 2, 0.0, H);
        return max_err_vs(w, 0.0, H, exp_neg);
    };
    const double r2 = err_hist(0.02) / err_hist(0.01);
    REQUIRE(r2 > 8.0 * 0.8);
    REQUIRE(r2 < 8.0 * 1.2);
}

TEST_CASE("evaluation outside the window is refused", "[waveform]") {
    Waveform w = extrapolate_constant(0.0, {1.0}, 0.1);
    REQUIRE_THROWS_AS(w.eval(0.2), numerical_error);
    REQUIRE_THROWS_AS(w.eval(-0.05), numerical_error);
}

TEST_CASE("piecewise linear carrier", "[waveform]") {
    Waveform w = Waveform::piecewise_linear({0.0, 0.5, 1.0}, {{0.0}, {1.0}, {0.0}});
    REQUIRE(w.eval(0.25)[0] == Approx(0.5));
    REQUIRE(w.eval(0.75)[0] == Approx(0.5));
    REQUIRE(operator_lphi(w) == 1.0);
}

TEST_CASE("waveform debug dump produces sampled CSV", "[waveform]") {
    Waveform w = extrapolate_linear(0.0, {1.0, 2.0}, {0.0, 0.0}, 1.0);
    std::ostringstream os;
    w.dump_csv(os, 5);
    std::istringstream is(os.str());
    std::string line;
    REQUIRE(std::getline(is, line));
    REQUIRE(line == "t,v0,v1");
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    REQUIRE(rows == 5);
}
