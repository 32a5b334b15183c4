#pragma once

// Problem-definition config files for linear problems (JSON). The ODE form
// is
//   y_S' = A_SS y_S + A_SF y_F,   y_F' = A_FS y_S + A_FF y_F;
// the DAE form adds B (differential/algebraic), C and D (constraint)
// coefficient matrices:
//   y_S' = A_SS y_S + A_SF y_F + B_SS z_S + B_SF z_F
//   y_F' = A_FS y_S + A_FF y_F + B_FS z_S + B_FF z_F
//    0   = C_SS y_S + C_SF y_F + D_SS z_S + D_SF z_F
//    0   = C_FS y_S + C_FF y_F + D_FS z_S + D_FF z_F
// Field names are documented in the README. Parse errors report the line;
// shape errors report the field.

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "multirate/contraction.hpp"
#include "multirate/core.hpp"
#include "multirate/problems.hpp"

namespace multirate {

namespace detail {

using json = nlohmann::json;

inline std::size_t line_of_byte(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

inline Vec get_vector(const json& j, const std::string& field, std::size_t expect = 0) {
    if (!j.contains(field)) throw validation_error("config field '" + field + "' missing");
    const json& v = j.at(field);
    if (!v.is_array()) throw validation_error("config field '" + field + "' must be an array");
    Vec out;
    for (const auto& x : v) {
        if (!x.is_number())
            throw validation_error("config field '" + field + "' must contain numbers");
        out.push_back(x.get<double>());
    }
    if (expect > 0 && out.size() != expect)
        throw validation_error("config field '" + field + "' has length " +
                               std::to_string(out.size()) + ", expected " +
                               std::to_string(expect));
    return out;
}

inline Mat get_matrix(const json& j, const std::string& field, std::size_t rows,
                      std::size_t cols, bool required) {
    if (!j.contains(field)) {
        if (required) throw validation_error("config field '" + field + "' missing");
        return Mat(rows, cols, 0.0);
    }
    const json& v = j.at(field);
    if (!v.is_array() || v.size() != rows)
        throw validation_error("config field '" + field + "' must be a " + std::to_string(rows) +
                               "x" + std::to_string(cols) + " matrix");
    Mat out(rows, cols);
    std::size_t i = 0;
    for (const auto& row : v) {
        if (!row.is_array() || row.size() != cols)
            throw validation_error("config field '" + field + "' row " + std::to_string(i) +
                                   " must have " + std::to_string(cols) + " entries");
        std::size_t jj = 0;
        for (const auto& x : row) {
            if (!x.is_number())
                throw validation_error("config field '" + field + "' must contain numbers");
            out(i, jj++) = x.get<double>();
        }
        ++i;
    }
    return out;
}

inline Vec mat_apply(const Mat& m, const Vec& x) {
    Vec out(m.rows, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) out[i] += m(i, j) * x[j];
    return out;
}

inline Vec add(Vec a, const Vec& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
}

}  // namespace detail

/// Load a problem definition from a JSON config file and wrap it as a
/// catalog entry with a generic fine-step reference (RK4 for ODEs,
/// Richardson-extrapolated implicit Euler for DAEs).
[[nodiscard]] inline CatalogEntry load_problem_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();

    detail::json j;
    try {
        j = detail::json::parse(text);
    } catch (const detail::json::parse_error& e) {
        throw validation_error("config parse error in " + path + " at line " +
                               std::to_string(detail::line_of_byte(text, e.byte)) + ": " +
                               e.what());
    }
    if (!j.is_object()) throw validation_error("config must be a JSON object");

    const std::string type = j.value("type", std::string("ode"));
    if (type != "ode" && type != "dae")
        throw validation_error("config field 'type' must be \"ode\" or \"dae\"");
    const std::string name = j.value("name", std::string("custom"));

    Vec ys0 = detail::get_vector(j, "y_slow0");
    Vec yf0 = detail::get_vector(j, "y_fast0");
    const std::size_t ns = ys0.size(), nf = yf0.size();
    if (ns == 0 || nf == 0)
        throw validation_error("config: y_slow0 and y_fast0 must be nonempty");
    const double t0 = j.value("t0", 0.0);
    if (!j.contains("t_end")) throw validation_error("config field 't_end' missing");
    const double t_end = j.at("t_end").get<double>();

    Mat A_SS = detail::get_matrix(j, "A_SS", ns, ns, true);
    Mat A_SF = detail::get_matrix(j, "A_SF", ns, nf, true);
    Mat A_FS = detail::get_matrix(j, "A_FS", nf, ns, true);
    Mat A_FF = detail::get_matrix(j, "A_FF", nf, nf, true);

    CatalogEntry entry;
    entry.id = name;

    if (type == "ode") {
        PartitionedOde p;
        p.dim_slow = ns;
        p.dim_fast = nf;
        p.y_slow0 = ys0;
        p.y_fast0 = yf0;
        p.t0 = t0;
        p.t_end = t_end;
        p.f_slow = [A_SS, A_SF](double, const Vec& ys, const Vec& yf) {
            return detail::add(detail::mat_apply(A_SS, ys), detail::mat_apply(A_SF, yf));
        };
        p.f_fast = [A_FS, A_FF](double, const Vec& ys, const Vec& yf) {
            return detail::add(detail::mat_apply(A_FS, ys), detail::mat_apply(A_FF, yf));
        };
        p.validate();
        entry.ode = p;
        entry.description = "custom linear ODE from " + path;
        PartitionedOde prob = p;
        const double h_ref = 1e-4;
        entry.reference = detail::cached_reference([prob, h_ref](double t) {
            const std::size_t n = std::max<std::size_t>(
                1, static_cast<std::size_t>(std::ceil((t - prob.t0) / h_ref)));
            Vec w = detail::rk4_monolithic(prob, t, 2 * n);
            const std::size_t nslow = prob.dim_slow;
            return RefState{Vec(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(nslow)),
                            Vec(w.begin() + static_cast<std::ptrdiff_t>(nslow), w.end()),
                            {},
                            {}};
        });
        entry.self_check = [prob, h_ref]() {
            const std::size_t n = static_cast<std::size_t>(std::ceil((prob.t_end - prob.t0) / h_ref));
            Vec a = detail::rk4_monolithic(prob, prob.t_end, n);
            Vec b = detail::rk4_monolithic(prob, prob.t_end, 2 * n);
            double d = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
            if (d > 1e-10)
                throw numerical_error("config reference self-check: RK4 resolutions disagree",
                                      prob.t_end, d);
        };
        return entry;
    }

    Vec zs0 = detail::get_vector(j, "z_slow0");
    Vec zf0 = j.contains("z_fast0") ? detail::get_vector(j, "z_fast0") : Vec{};
    const std::size_t nzs = zs0.size(), nzf = zf0.size();
    Mat B_SS = detail::get_matrix(j, "B_SS", ns, nzs, false);
    Mat B_SF = detail::get_matrix(j, "B_SF", ns, nzf, false);
    Mat B_FS = detail::get_matrix(j, "B_FS", nf, nzs, false);
    Mat B_FF = detail::get_matrix(j, "B_FF", nf, nzf, false);
    Mat C_SS = detail::get_matrix(j, "C_SS", nzs, ns, nzs > 0);
    Mat C_SF = detail::get_matrix(j, "C_SF", nzs, nf, false);
    Mat C_FS = detail::get_matrix(j, "C_FS", nzf, ns, false);
    Mat C_FF = detail::get_matrix(j, "C_FF", nzf, nf, nzf > 0);
    Mat D_SS = detail::get_matrix(j, "D_SS", nzs, nzs, nzs > 0);
    Mat D_SF = detail::get_matrix(j, "D_SF", nzs, nzf, false);
    Mat D_FS = detail::get_matrix(j, "D_FS", nzf, nzs, false);
    Mat D_FF = detail::get_matrix(j, "D_FF", nzf, nzf, nzf > 0);

    PartitionedDae p;
    p.dim_slow = ns;
    p.dim_fast = nf;
    p.dim_zslow = nzs;
    p.dim_zfast = nzf;
    p.y_slow0 = ys0;
    p.y_fast0 = yf0;
    p.z_slow0 = zs0;
    p.z_fast0 = zf0;
    p.t0 = t0;
    p.t_end = t_end;
    if (j.contains("jacobian_cond_cap")) p.jacobian_cond_cap = j.at("jacobian_cond_cap").get<double>();
    if (j.contains("consistency_tol")) p.consistency_tol = j.at("consistency_tol").get<double>();
    using detail::add;
    using detail::mat_apply;
    p.f_slow = [A_SS, A_SF, B_SS, B_SF](double, const Vec& ys, const Vec& yf, const Vec& zs,
                                        const Vec& zf) {
        Vec out = add(mat_apply(A_SS, ys), mat_apply(A_SF, yf));
        if (!zs.empty()) out = add(std::move(out), mat_apply(B_SS, zs));
        if (!zf.empty()) out = add(std::move(out), mat_apply(B_SF, zf));
        return out;
    };
    p.f_fast = [A_FS, A_FF, B_FS, B_FF](double, const Vec& ys, const Vec& yf, const Vec& zs,
                                        const Vec& zf) {
        Vec out = add(mat_apply(A_FS, ys), mat_apply(A_FF, yf));
        if (!zs.empty()) out = add(std::move(out), mat_apply(B_FS, zs));
        if (!zf.empty()) out = add(std::move(out), mat_apply(B_FF, zf));
        return out;
    };
    if (nzs > 0)
        p.g_slow = [C_SS, C_SF, D_SS, D_SF](double, const Vec& ys, const Vec& yf, const Vec& zs,
                                            const Vec& zf) {
            Vec out = add(mat_apply(C_SS, ys), mat_apply(C_SF, yf));
            out = add(std::move(out), mat_apply(D_SS, zs));
            if (!zf.empty()) out = add(std::move(out), mat_apply(D_SF, zf));
            return out;
        };
    if (nzf > 0)
        p.g_fast = [C_FS, C_FF, D_FS, D_FF](double, const Vec& ys, const Vec& yf, const Vec& zs,
                                            const Vec& zf) {
            Vec out = add(mat_apply(C_FS, ys), mat_apply(C_FF, yf));
            if (!zs.empty()) out = add(std::move(out), mat_apply(D_FS, zs));
            out = add(std::move(out), mat_apply(D_FF, zf));
            return out;
        };
    p.validate();
    check_dae_index1(p);
    entry.dae = p;
    entry.description = "custom linear DAE from " + path;
    PartitionedDae prob = p;
    const double h0 = 2e-3;
    entry.reference = detail::cached_reference([prob, h0](double t) {
        detail::RichardsonResult r = detail::richardson_ie(prob, t, h0, 4);
        if (r.self_diff > 1e-10)
            throw numerical_error("config reference self-check failed", t, r.self_diff);
        const std::size_t nslow = prob.dim_slow, nzslow = prob.dim_zslow;
        return RefState{Vec(r.y.begin(), r.y.begin() + static_cast<std::ptrdiff_t>(nslow)),
                        Vec(r.y.begin() + static_cast<std::ptrdiff_t>(nslow), r.y.end()),
                        Vec(r.z.begin(), r.z.begin() + static_cast<std::ptrdiff_t>(nzslow)),
                        Vec(r.z.begin() + static_cast<std::ptrdiff_t>(nzslow), r.z.end())};
    });
    auto reference = entry.reference;
    const double te = p.t_end;
    entry.self_check = [reference, te]() { reference(te); };
    return entry;
}

/// Parse inline parameter overrides of the form "b=0.5,d=0.25".
[[nodiscard]] inline std::map<std::string, double> parse_inline_params(const std::string& text) {
    std::map<std::string, double> out;
    std::istringstream is(text);
    std::string item;
    while (std::getline(is, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0)
            throw validation_error("bad inline parameter '" + item + "'; expected key=value");
        const std::string key = item.substr(0, eq);
        const std::string val = item.substr(eq + 1);
        char* end = nullptr;
        const double v = std::strtod(val.c_str(), &end);
        if (end == val.c_str() || *end != '\0')
            throw validation_error("bad numeric value in inline parameter '" + item + "'");
        out[key] = v;
    }
    if (out.empty()) throw validation_error("empty inline parameter list");
    return out;
}

}  // namespace multirate
