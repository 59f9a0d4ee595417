#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "scan3d/approx_pipeline.hpp"
#include "scan3d/is_estimator.hpp"
#include "scan3d/table_runner.hpp"

namespace scan3d {

using Json = nlohmann::ordered_json;

enum class OutputFormat { json, csv, text };

// ---------------------------------------------------------------- scalars

/// Finite values as numbers; inf and NaN as null.
inline Json json_number(double x)
{
    return std::isfinite(x) ? Json(x) : Json(nullptr);
}

/// Shortest round-trip text; "inf", "-inf" and "nan" for non-finite values.
inline std::string text_number(double x)
{
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return format_double(x);
}

/// Quotes a CSV field when it holds a comma, quote or line break (RFC 4180).
inline std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (const char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::string csv_row(const std::vector<std::string>& fields)
{
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) line += ',';
        line += csv_field(fields[i]);
    }
    return line + "\r\n";
}

inline Json extent_json(const Extent3& e)
{
    return Json::array({e.d1, e.d2, e.d3});
}

inline std::string rts_label(int r, int t, int s)
{
    return std::to_string(r) + std::to_string(t) + std::to_string(s);
}

// ---------------------------------------------------------------- approx

inline Json budget_json(const ErrorBudget& b)
{
    const auto& c = b.cascade;
    const auto& a = b.approximation;
    const auto& s = b.simulation;
    Json j;
    j["gamma_ts"] = {{"22", c.gamma_ts[0][0]}, {"23", c.gamma_ts[0][1]}, {"32", c.gamma_ts[1][0]}, {"33", c.gamma_ts[1][1]}};
    j["gamma_s"] = {{"2", c.gamma_s[0]}, {"3", c.gamma_s[1]}};
    j["point_raw"] = json_number(c.point_raw);
    j["alpha3"] = a.alpha3;
    j["alpha23"] = a.alpha23;
    j["alpha233"] = a.alpha233;
    j["F1"] = json_number(a.F1);
    j["F2"] = json_number(a.F2);
    j["F3"] = json_number(a.F3);
    j["delta_22"] = a.delta_22;
    j["delta_23"] = a.delta_23;
    j["delta_2"] = a.delta_2;
    Json u_rts = Json::object();
    for (int r = 2; r <= 3; ++r)
        for (int t = 2; t <= 3; ++t)
            for (int v = 2; v <= 3; ++v) u_rts[rts_label(r, t, v)] = s.u_rts[QTable::slot(r, t, v)];
    j["u_rts"] = u_rts;
    j["u_ts"] = {{"22", s.u_ts[0][0]}, {"23", s.u_ts[0][1]}, {"32", s.u_ts[1][0]}, {"33", s.u_ts[1][1]}};
    j["u_s"] = {{"2", s.u_s[0]}, {"3", s.u_s[1]}};
    j["delta_bar_22"] = s.delta_bar_22;
    j["delta_bar_23"] = s.delta_bar_23;
    j["delta_bar_2"] = s.delta_bar_2;
    j["E_app"] = json_number(a.E_app);
    j["E_sf"] = json_number(s.E_sf);
    j["E_sapp"] = json_number(s.E_sapp);
    j["E_sim"] = json_number(s.E_sim);
    j["total"] = json_number(b.total);
    return j;
}

inline Json q_table_json(const QTable& used)
{
    Json arr = Json::array();
    for (int r = 2; r <= 3; ++r)
        for (int t = 2; t <= 3; ++t)
            for (int s = 2; s <= 3; ++s) {
                const QEstimate& e = used.at(r, t, s);
                arr.push_back({{"rts", rts_label(r, t, s)},
                               {"value", e.value},
                               {"raw_value", e.raw_value},
                               {"beta", e.beta},
                               {"rho_hat", e.rho_hat},
                               {"rho_var", e.rho_var},
                               {"bonferroni", e.bonferroni}});
            }
    return arr;
}

inline Json ratios_json(const Ratios& L)
{
    return Json::array({L[0], L[1], L[2]});
}

/// Core fields shared by full reports and bracket entries.
inline Json report_core_json(const ApproxReport& r)
{
    return {{"region", extent_json(r.geometry.region())},
            {"L", ratios_json(r.L)},
            {"point", r.point},
            {"e_app", json_number(r.E_app)},
            {"e_sim", json_number(r.E_sim)},
            {"total", json_number(r.total)},
            {"applicable", r.applicable},
            {"failing_gate", gate_name(r.failing)},
            {"budget", budget_json(r.budget)}};
}

inline Json approx_json(const ApproxReport& r)
{
    Json j{{"n", r.n},
           {"point", r.point},
           {"e_app", json_number(r.E_app)},
           {"e_sim", json_number(r.E_sim)},
           {"total", json_number(r.total)},
           {"applicable", r.applicable},
           {"failing_gate", gate_name(r.failing)},
           {"interpolated", false},
           {"L", ratios_json(r.L)},
           {"q", q_table_json(r.q_table)},
           {"budget", budget_json(r.budget)}};
    return j;
}

inline bool interpolated_applicable(const InterpolatedReport& r)
{
    return r.lower.applicable && r.upper.applicable;
}

inline Json approx_json(const InterpolatedReport& r)
{
    const bool ok = interpolated_applicable(r);
    Json j{{"n", r.upper.n},
           {"point", r.point},
           {"e_app", json_number(std::max(r.lower.E_app, r.upper.E_app))},
           {"e_sim", json_number(std::max(r.lower.E_sim, r.upper.E_sim))},
           {"total", json_number(r.total)},
           {"applicable", ok},
           {"failing_gate", gate_name(r.lower.applicable ? r.upper.failing : r.lower.failing)},
           {"interpolated", true},
           {"q", q_table_json(r.upper.q_table)}};
    j["bracket"] = {{"weight", r.weight},
                    {"min", r.bracket_min},
                    {"max", r.bracket_max},
                    {"inverted", r.inverted},
                    {"lower", report_core_json(r.lower)},
                    {"upper", report_core_json(r.upper)}};
    return j;
}

inline const std::vector<std::string>& approx_csv_header()
{
    static const std::vector<std::string> header = [] {
        std::vector<std::string> h{"n", "point", "e_app", "e_sim", "total"};
        for (const char* prefix : {"q", "beta"})
            for (int r = 2; r <= 3; ++r)
                for (int t = 2; t <= 3; ++t)
                    for (int s = 2; s <= 3; ++s) h.push_back(prefix + rts_label(r, t, s));
        h.emplace_back("seed");
        h.emplace_back("iterations");
        return h;
    }();
    return header;
}

inline std::vector<std::string> approx_csv_fields(std::int64_t n, double point, double e_app, double e_sim, double total,
                                                  const QTable& q, std::uint64_t seed, std::int64_t iterations)
{
    std::vector<std::string> f{std::to_string(n), text_number(point), text_number(e_app), text_number(e_sim),
                               text_number(total)};
    for (const bool beta : {false, true})
        for (int r = 2; r <= 3; ++r)
            for (int t = 2; t <= 3; ++t)
                for (int s = 2; s <= 3; ++s) f.push_back(text_number(beta ? q.beta(r, t, s) : q.q(r, t, s)));
    f.push_back(std::to_string(seed));
    f.push_back(std::to_string(iterations));
    return f;
}

inline std::vector<std::string> approx_csv_fields(const ApproxReport& r)
{
    return approx_csv_fields(r.n, r.point, r.E_app, r.E_sim, r.total, r.q_table, r.seed, r.iterations);
}

inline std::vector<std::string> approx_csv_fields(const InterpolatedReport& r)
{
    return approx_csv_fields(r.upper.n, r.point, std::max(r.lower.E_app, r.upper.E_app),
                             std::max(r.lower.E_sim, r.upper.E_sim), r.total, r.upper.q_table, r.upper.seed,
                             r.upper.iterations);
}

inline std::string approx_text_line(std::int64_t n, double point, double e_app, double e_sim, double total,
                                    bool applicable, GateLevel gate)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, "%4lld  %.8f  %12.6g  %12.6g  %12.6g  %s", static_cast<long long>(n), point, e_app,
                  e_sim, total, applicable ? "ok" : (std::string("inapplicable (") + gate_name(gate) + ")").c_str());
    return buf;
}

inline std::string approx_text_header()
{
    return "   n  point              e_app         e_sim         total  bound\n";
}

inline std::string approx_text(const ApproxReport& r)
{
    return approx_text_line(r.n, r.point, r.E_app, r.E_sim, r.total, r.applicable, r.failing) + "\n";
}

inline std::string approx_text(const InterpolatedReport& r)
{
    const bool ok = interpolated_applicable(r);
    std::string s = approx_text_line(r.upper.n, r.point, std::max(r.lower.E_app, r.upper.E_app),
                                     std::max(r.lower.E_sim, r.upper.E_sim), r.total, ok,
                                     r.lower.applicable ? r.upper.failing : r.lower.failing);
    char buf[256];
    std::snprintf(buf, sizeof buf, "\n      bracket [%.8f, %.8f] weight %.6f%s\n", r.bracket_min, r.bracket_max,
                  r.weight, r.inverted ? " (inverted)" : "");
    return s + buf;
}

// ---------------------------------------------------------------- tables

inline Json published_row_json(const PublishedRow& p)
{
    Json j = Json::object();
    auto put = [&](const char* key, double v) {
        if (!std::isnan(v)) j[key] = v;
    };
    put("naive", p.naive);
    put("naive_pm", p.naive_pm);
    put("point", p.point);
    put("e_app", p.e_app);
    put("e_sim", p.e_sim);
    put("total", p.total);
    put("bracket_next", p.bracket_next);
    put("bracket_next_pm", p.bracket_next_pm);
    put("bracket_floor", p.bracket_floor);
    put("bracket_floor_pm", p.bracket_floor_pm);
    return j;
}

inline Json table_row_json(const TableRowResult& row)
{
    Json j{{"section", row.section},
           {"n", row.n},
           {"point", row.point()},
           {"e_app", json_number(row.e_app())},
           {"e_sim", json_number(row.e_sim())},
           {"total", json_number(row.total())}};
    j["naive"] = row.naive ? Json{{"p_hat", row.naive->p_hat}, {"beta", row.naive->beta}} : Json(nullptr);
    j["published"] = published_row_json(row.published);
    Json cells = Json::array();
    for (const auto& c : row.cells) {
        cells.push_back({{"column", c.column},
                         {"published", c.published},
                         {"computed", c.computed},
                         {"deviation", c.deviation()},
                         {"tolerance", json_number(c.tolerance)},
                         {"within", c.within}});
    }
    j["comparisons"] = cells;
    j["report"] = row.report ? approx_json(*row.report) : approx_json(*row.interpolated);
    return j;
}

inline std::string table_csv(const TableResult& t)
{
    std::string out = csv_row({"table", "section", "n", "column", "published", "computed", "deviation", "tolerance",
                               "within", "e_app", "e_sim", "total"});
    for (const auto& row : t.rows) {
        for (const auto& c : row.cells) {
            out += csv_row({std::to_string(t.table.id), row.section, std::to_string(row.n), c.column,
                            text_number(c.published), text_number(c.computed), text_number(c.deviation()),
                            text_number(c.tolerance), c.within ? "true" : "false", text_number(row.e_app()),
                            text_number(row.e_sim()), text_number(row.total())});
        }
    }
    return out;
}

inline std::string table_text(const TableResult& t)
{
    std::string out = "Table " + std::to_string(t.table.id) + ": " + t.table.caption + "\n";
    out += std::string("delta_22 form: ") + (t.squared_delta22 ? "squared" : "as printed (unsquared)") + "\n";
    std::string current;
    char buf[320];
    for (const auto& row : t.rows) {
        if (row.section != current) {
            current = row.section;
            out += "\n[" + current + "]\n";
            if (t.table.bracketed) {
                out += "   n  P(S(L+1)<=n)   published     P(S(L)<=n)     published     naive          published\n";
            } else {
                out += "   n  point        published   e_app        e_sim        total        pub.total    naive      "
                       "published\n";
            }
        }
        const double naive = row.naive ? row.naive->p_hat : std::nan("");
        if (t.table.bracketed) {
            const auto& in = *row.interpolated;
            std::snprintf(buf, sizeof buf, "%4lld  %.8f     %.8f    %.8f     %.8f    %.8f     %.8f\n",
                          static_cast<long long>(row.n), in.lower.point, row.published.bracket_next, in.upper.point,
                          row.published.bracket_floor, naive, row.published.naive);
        } else {
            std::snprintf(buf, sizeof buf, "%4lld  %.6f     %.6f    %-11.5g  %-11.5g  %-11.5g  %-11.5g  %.6f   %.6f\n",
                          static_cast<long long>(row.n), row.point(), row.published.point, row.e_app(), row.e_sim(),
                          row.total(), row.published.total, naive, row.published.naive);
        }
        out += buf;
        for (const auto& c : row.cells) {
            std::snprintf(buf, sizeof buf, "        %-14s deviation %+.3e  tolerance %.3e  %s\n", c.column.c_str(),
                          c.deviation(), c.tolerance, c.within ? "within" : "OUTSIDE");
            out += buf;
        }
    }
    out += std::string("\nregression: ") + (t.all_within() ? "all cells within tolerance" : "deviations outside tolerance") +
           "\n";
    return out;
}

} // namespace scan3d
