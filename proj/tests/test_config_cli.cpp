#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "multirate/cli.hpp"
#include "multirate/config.hpp"
#include "multirate/problems.hpp"

using namespace multirate;
using Catch::Approx;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path);
    os << text;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

const char* kLin2Config = R"({
  "name": "lin2-config",
  "type": "ode",
  "t0": 0.0, "t_end": 1.0,
  "y_slow0": [1.0], "y_fast0": [1.0],
  "A_SS": [[-1.0]], "A_SF": [[0.1]],
  "A_FS": [[0.2]], "A_FF": [[-10.0]]
})";

const char* kDaeConfig = R"({
  "name": "dae-config",
  "type": "dae",
  "t0": 0.0, "t_end": 1.0,
  "y_slow0": [1.0], "y_fast0": [1.0],
  "z_slow0": [1.0], "z_fast0": [1.0],
  "A_SS": [[-1.0]], "A_SF": [[0.0]], "A_FS": [[0.0]], "A_FF": [[-10.0]],
  "B_SF": [[1.0]], "B_FS": [[1.0]],
  "C_SS": [[-1.0]], "C_FF": [[-1.0]],
  "D_SS": [[1.0]], "D_SF": [[-0.5]], "D_FS": [[-0.5]], "D_FF": [[1.0]]
})";

}  // namespace

TEST_CASE("ODE config files reproduce the hand-coded dynamics", "[config]") {
    auto path = temp_file("mr_lin2.json");
    write_file(path, kLin2Config);
    CatalogEntry entry = load_problem_config(path.string());
    REQUIRE(entry.id == "lin2-config");
    REQUIRE_FALSE(entry.is_dae());
    PartitionedOde builtin = make_lin2();
    for (double ys : {-0.5, 1.0}) {
        for (double yf : {0.25, 2.0}) {
            REQUIRE(entry.ode->f_slow(0.0, {ys}, {yf})[0] ==
                    Approx(builtin.f_slow(0.0, {ys}, {yf})[0]).margin(1e-15));
            REQUIRE(entry.ode->f_fast(0.0, {ys}, {yf})[0] ==
                    Approx(builtin.f_fast(0.0, {ys}, {yf})[0]).margin(1e-15));
        }
    }
    REQUIRE_NOTHROW(entry.self_check());
}

TEST_CASE("DAE config files build the coupled constraint system", "[config]") {
    auto path = temp_file("mr_dae.json");
    write_file(path, kDaeConfig);
    CatalogEntry entry = load_problem_config(path.string());
    REQUIRE(entry.is_dae());
    // g_S = -y_S + z_S - 0.5 z_F: consistent z at y = (1,1) solves the
    // same 2x2 system as the built-in benchmark with b = d = 0.5
    auto [zs, zf] = consistent_initialize(*entry.dae);
    REQUIRE(zs[0] == Approx(2.0).margin(1e-10));
    REQUIRE(zf[0] == Approx(2.0).margin(1e-10));
}

TEST_CASE("config parse errors report the line", "[config]") {
    auto path = temp_file("mr_broken.json");
    write_file(path, "{\n  \"type\": \"ode\",\n  \"t_end\": oops\n}\n");
    try {
        (void)load_problem_config(path.string());
        FAIL("expected validation_error");
    } catch (const validation_error& e) {
        REQUIRE(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("config field errors name the field", "[config]") {
    auto path = temp_file("mr_misshaped.json");
    write_file(path, R"({
      "type": "ode",
      "t_end": 1.0,
      "y_slow0": [1.0], "y_fast0": [1.0],
      "A_SS": [[-1.0, 2.0]], "A_SF": [[0.1]],
      "A_FS": [[0.2]], "A_FF": [[-10.0]]
    })");
    try {
        (void)load_problem_config(path.string());
        FAIL("expected validation_error");
    } catch (const validation_error& e) {
        REQUIRE(std::string(e.what()).find("A_SS") != std::string::npos);
    }

    write_file(path, R"({"type": "ode", "y_slow0": [1.0], "y_fast0": [1.0],
      "A_SS": [[-1.0]], "A_SF": [[0.1]], "A_FS": [[0.2]], "A_FF": [[-10.0]]})");
    try {
        (void)load_problem_config(path.string());
        FAIL("expected validation_error");
    } catch (const validation_error& e) {
        REQUIRE(std::string(e.what()).find("t_end") != std::string::npos);
    }
}

TEST_CASE("index-1 violations in configs are rejected", "[config]") {
    auto path = temp_file("mr_singular.json");
    std::string text = kDaeConfig;
    // b = d = 1 (D_SF = D_FS = -1) makes the full algebraic Jacobian singular
    size_t pos;
    while ((pos = text.find("-0.5")) != std::string::npos) text.replace(pos, 4, "-1.0");
    write_file(path, text);
    REQUIRE_THROWS_AS((void)load_problem_config(path.string()), validation_error);
}

TEST_CASE("missing config files are a validation error", "[config]") {
    REQUIRE_THROWS_AS((void)load_problem_config("/nonexistent/nowhere.json"),
                      validation_error);
}

TEST_CASE("inline parameter lists parse key=value pairs", "[config]") {
    auto params = parse_inline_params("b=0.5,d=0.25");
    REQUIRE(params.at("b") == 0.5);
    REQUIRE(params.at("d") == 0.25);
    REQUIRE_THROWS_AS(parse_inline_params("b=x"), validation_error);
    REQUIRE_THROWS_AS(parse_inline_params("=1"), validation_error);
}

TEST_CASE("CLI: catalog lists problems", "[cli]") {
    auto out = temp_file("mr_catalog.txt");
    REQUIRE(cli::run({"catalog", "--out", out.string()}) == 0);
    const std::string text = read_file(out);
    REQUIRE(text.find("lin2") != std::string::npos);
    REQUIRE(text.find("dae-lin") != std::string::npos);
}

TEST_CASE("CLI: unknown flags are rejected with exit code 1", "[cli]") {
    REQUIRE(cli::run({"run", "--does-not-exist", "1"}) == 1);
    REQUIRE(cli::run({"frobnicate"}) == 1);
}

TEST_CASE("CLI: run emits a deterministic trajectory CSV", "[cli]") {
    auto out1 = temp_file("mr_run1.csv");
    auto out2 = temp_file("mr_run2.csv");
    std::vector<std::string> args{"run",  "--problem", "lin2", "--strategy",
                                  "fastest-first", "--scheme", "heun", "--H", "0.05",
                                  "--m",  "5", "--extrap-order", "1", "--interp-order", "1",
                                  "--out", out1.string()};
    REQUIRE(cli::run(args) == 0);
    args.back() = out2.string();
    REQUIRE(cli::run(args) == 0);
    const std::string a = read_file(out1), b = read_file(out2);
    REQUIRE_FALSE(a.empty());
    REQUIRE(a == b);

    std::istringstream is(a);
    Trajectory traj = parse_trajectory_csv(is);
    validate_trajectory(traj, 0.0, 1.0);
    REQUIRE(traj.macro_times.size() == 21);
    REQUIRE(traj.fast_micro_times.size() == 101);
}

TEST_CASE("CLI: convergence requires at least four step sizes", "[cli]") {
    REQUIRE(cli::run({"convergence", "--problem", "lin2", "--H", "0.1,0.05,0.025"}) == 1);
}

TEST_CASE("CLI: contraction reports the constructed ratios", "[cli]") {
    auto out = temp_file("mr_contraction.txt");
    REQUIRE(cli::run({"contraction", "--problem", "dae-lin", "--config", "b=0.5,d=0.25",
                      "--out", out.string()}) == 0);
    const std::string text = read_file(out);
    REQUIRE(text.find("alpha_S=0.5") != std::string::npos);
    REQUIRE(text.find("alpha_F=0.25") != std::string::npos);
}

TEST_CASE("CLI: the stability gate maps to exit code 3 and --force overrides it", "[cli]") {
    auto out = temp_file("mr_forced.csv");
    std::vector<std::string> base{"run", "--problem", "dae-lin", "--config", "b=1.5,d=1.5",
                                  "--t-end", "0.2", "--H", "0.05", "--m", "2",
                                  "--out", out.string()};
    REQUIRE(cli::run(base) == 3);
    base.push_back("--force");
    REQUIRE(cli::run(base) == 0);
}

TEST_CASE("CLI: sweep writes the stability table", "[cli]") {
    auto out = temp_file("mr_sweep.csv");
    REQUIRE(cli::run({"sweep", "--problem", "dae-lin", "--H", "0.05", "--m", "2", "--out",
                      out.string()}) == 0);
    const std::string text = read_file(out);
    REQUIRE(text.rfind("b,d,", 0) == 0);
    REQUIRE(std::count(text.begin(), text.end(), '\n') == 37);  // 6x6 grid + header
}

TEST_CASE("CLI: run reproduces the golden trajectory byte for byte", "[cli]") {
    auto out = temp_file("mr_golden_check.csv");
    REQUIRE(cli::run({"run", "--problem", "lin2", "--strategy", "fastest-first", "--scheme",
                      "heun", "--H", "0.05", "--m", "5", "--out", out.string()}) == 0);
    const std::string fresh = read_file(out);
    const std::string golden =
        read_file(std::filesystem::path(MR_TEST_DATA_DIR) / "golden_run_lin2_ff_heun.csv");
    REQUIRE_FALSE(golden.empty());
    REQUIRE(fresh == golden);
}

TEST_CASE("shipped sample configs load and run", "[config]") {
    const auto dir = std::filesystem::path(MR_CONFIG_DIR);
    CatalogEntry strong = load_problem_config((dir / "lin2_strong.json").string());
    REQUIRE(strong.id == "lin2-strong");
    REQUIRE(strong.ode->f_slow(0.0, {1.0}, {1.0})[0] == Approx(1.0));  // -1 + 2

    CatalogEntry dae = load_problem_config((dir / "dae_lin_b05_d025.json").string());
    REQUIRE(dae.is_dae());
    auto [aS, aF] = contraction_ratios(
        estimate_lipschitz(*dae.dae, default_contraction_samples(*dae.dae)));
    REQUIRE(aS == Approx(0.5).margin(1e-8));
    REQUIRE(aF == Approx(0.25).margin(1e-8));
}

TEST_CASE("CLI: convergence study writes CSV and slopes", "[cli]") {
    auto out = temp_file("mr_conv.csv");
    REQUIRE(cli::run({"convergence", "--problem", "lin2", "--scheme", "heun", "--strategy",
                      "slowest-first", "--extrap-order", "1", "--interp-order", "1", "--H",
                      "0.0125", "--m", "2", "--out", out.string()}) == 0);
    const std::string text = read_file(out);
    REQUIRE(text.rfind("H,error_slow,error_fast,error_total", 0) == 0);
    REQUIRE(std::count(text.begin(), text.end(), '\n') == 6);  // 5 rungs + header
}
