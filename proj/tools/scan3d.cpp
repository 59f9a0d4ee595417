// scan3d command-line front end: approx, simulate, critical and table.

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scan3d/approx_pipeline.hpp"
#include "scan3d/config.hpp"
#include "scan3d/is_estimator.hpp"
#include "scan3d/report_io.hpp"
#include "scan3d/table_runner.hpp"

namespace {

using namespace scan3d;

enum ExitCode : int { kOk = 0, kUsage = 1, kInapplicable = 2, kRegression = 3 };

struct Settings {
    std::string model;
    std::string region;
    std::string window;
    std::string n;
    std::int64_t iterations = 100000;
    std::int64_t repetitions = 1000;
    std::uint64_t seed = 0;
    std::string format = "json";
    bool squared_delta22 = false;
    bool printed_delta22 = false;
    std::string step4 = "tau";
    std::string l_rule = "infimum";
    bool no_monotone = false;
    int threads = 0;
    double significance = 0.05;
    bool conservative = false;
    bool no_naive = false;
    bool quiet = false;
    int table_id = 0;
};

class Progress {
public:
    explicit Progress(bool quiet) : quiet_(quiet), start_(std::chrono::steady_clock::now()) {}

    void operator()(const std::string& message) const
    {
        if (!quiet_) std::cerr << "[" << elapsed_text() << "] " << message << std::endl;
    }

    void done() const
    {
        if (!quiet_) std::cerr << "elapsed " << elapsed_text() << std::endl;
    }

private:
    std::string elapsed_text() const
    {
        const std::chrono::duration<double> d = std::chrono::steady_clock::now() - start_;
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2fs", d.count());
        return buf;
    }

    bool quiet_;
    std::chrono::steady_clock::time_point start_;
};

OutputFormat output_format(const std::string& name)
{
    if (name == "csv") return OutputFormat::csv;
    if (name == "text") return OutputFormat::text;
    return OutputFormat::json;
}

PipelineOptions pipeline_options(const Settings& s, bool squared)
{
    PipelineOptions o;
    o.iterations = s.iterations;
    o.simulation.seed = s.seed;
    o.simulation.threads = s.threads;
    o.simulation.step4 = s.step4 == "sampled-T" ? Step4Threshold::sampled_total : Step4Threshold::tau;
    o.squared_delta22 = squared;
    o.monotone_enforce = !s.no_monotone;
    o.l_rule = s.l_rule == "minimize" ? LRule::minimize_f : LRule::near_infimum;
    return o;
}

void require(const std::string& value, const char* flag)
{
    if (value.empty()) throw ParameterError(std::string("missing required option --") + flag);
}

Json config_json(const Settings& s, const char* command, bool squared)
{
    Json c;
    if (std::string(command) != "table") {
        c["model"] = parse_model(s.model).describe();
        c["region"] = extent_json(parse_extent(s.region));
        c["window"] = extent_json(parse_extent(s.window));
    }
    c["seed"] = s.seed;
    if (std::string(command) != "simulate") {
        c["iterations"] = s.iterations;
        c["squared_delta22"] = squared;
        c["step4_threshold"] = s.step4;
        c["monotone_enforce"] = !s.no_monotone;
        c["l_rule"] = s.l_rule;
    }
    return c;
}

Json document(const char* command, Json config)
{
    Json d;
    d["tool"] = "scan3d";
    d["command"] = command;
    d["config"] = std::move(config);
    d["reports"] = Json::array();
    return d;
}

void emit_json(const Json& doc)
{
    std::cout << doc.dump(2) << "\n";
}

std::string text_preamble(const Json& config)
{
    std::string out;
    for (const auto& [key, value] : config.items()) out += "# " + key + " = " + value.dump() + "\n";
    return out;
}

int run_approx(const Settings& s, OutputFormat fmt, const Progress& progress)
{
    require(s.model, "model");
    require(s.region, "region");
    require(s.window, "window");
    require(s.n, "n");
    const DistributionModel model = parse_model(s.model);
    const ScanGeometry geometry(parse_extent(s.region), parse_extent(s.window));
    const auto ns = parse_n_values(s.n);
    const PipelineOptions opts = pipeline_options(s, s.squared_delta22);

    Json doc = document("approx", config_json(s, "approx", opts.squared_delta22));
    std::string csv = csv_row(approx_csv_header());
    std::string text = text_preamble(doc["config"]) + approx_text_header();
    bool all_applicable = true;
    for (const auto n : ns) {
        progress("approx n=" + std::to_string(n));
        if (geometry.divisible()) {
            const ApproxReport r = approximate_cdf(geometry, model, n, opts);
            all_applicable = all_applicable && r.applicable;
            doc["reports"].push_back(approx_json(r));
            csv += csv_row(approx_csv_fields(r));
            text += approx_text(r);
        } else {
            const InterpolatedReport r = interpolated_cdf(geometry, model, n, opts);
            all_applicable = all_applicable && interpolated_applicable(r);
            doc["reports"].push_back(approx_json(r));
            csv += csv_row(approx_csv_fields(r));
            text += approx_text(r);
        }
    }
    if (fmt == OutputFormat::json) emit_json(doc);
    else std::cout << (fmt == OutputFormat::csv ? csv : text);
    if (!all_applicable) std::cerr << "warning: error bound inapplicable for at least one n (validity gate exceeded)\n";
    return all_applicable ? kOk : kInapplicable;
}

int run_simulate(const Settings& s, OutputFormat fmt, const Progress& progress)
{
    require(s.model, "model");
    require(s.region, "region");
    require(s.window, "window");
    require(s.n, "n");
    if (s.repetitions < 1) throw ParameterError("--repetitions must be >= 1");
    const DistributionModel model = parse_model(s.model);
    const ScanGeometry geometry(parse_extent(s.region), parse_extent(s.window));
    const auto ns = parse_n_values(s.n);
    SimulationOptions sim;
    sim.seed = s.seed;
    sim.threads = s.threads;

    progress("naive simulation, " + std::to_string(s.repetitions) + " repetitions");
    const ScanHistogram hist = naive_scan_distribution(geometry, model, s.repetitions, sim);

    Json config = config_json(s, "simulate", false);
    config["repetitions"] = s.repetitions;
    Json doc = document("simulate", config);
    std::string csv = csv_row({"n", "p_hat", "beta", "repetitions", "seed"});
    std::string text = text_preamble(config) + "   n  p_hat        beta\n";
    for (const auto n : ns) {
        const double p = hist.cdf(n);
        const double b = hist.beta(n);
        doc["reports"].push_back({{"n", n}, {"p_hat", p}, {"beta", b}, {"repetitions", hist.repetitions}});
        csv += csv_row({std::to_string(n), text_number(p), text_number(b), std::to_string(hist.repetitions),
                        std::to_string(s.seed)});
        char buf[96];
        std::snprintf(buf, sizeof buf, "%4lld  %.8f   %.3e\n", static_cast<long long>(n), p, b);
        text += buf;
    }
    if (fmt == OutputFormat::json) emit_json(doc);
    else std::cout << (fmt == OutputFormat::csv ? csv : text);
    return kOk;
}

int run_critical(const Settings& s, OutputFormat fmt, const Progress& progress)
{
    require(s.model, "model");
    require(s.region, "region");
    require(s.window, "window");
    const DistributionModel model = parse_model(s.model);
    const ScanGeometry geometry(parse_extent(s.region), parse_extent(s.window));
    const PipelineOptions opts = pipeline_options(s, s.squared_delta22);

    auto evaluate = [&](std::int64_t n) {
        progress("critical: evaluating P(S <= " + std::to_string(n) + ")");
        return evaluate_cdf(geometry, model, n, opts);
    };
    Json config = config_json(s, "critical", opts.squared_delta22);
    config["significance"] = s.significance;
    config["conservative"] = s.conservative;
    Json doc = document("critical", config);

    const CriticalValue cv = critical_value(geometry, model, s.significance, opts, s.conservative, evaluate);
    doc["reports"].push_back({{"tau", cv.tau}, {"attained", cv.attained}});
    if (fmt == OutputFormat::json) {
        emit_json(doc);
    } else if (fmt == OutputFormat::csv) {
        std::cout << csv_row({"tau", "attained", "significance", "conservative", "seed", "iterations"})
                  << csv_row({std::to_string(cv.tau), text_number(cv.attained), text_number(s.significance),
                              s.conservative ? "true" : "false", std::to_string(s.seed), std::to_string(s.iterations)});
    } else {
        std::cout << text_preamble(config) << "critical value tau = " << cv.tau
                  << "  (P(S >= tau) estimate " << text_number(cv.attained) << ")\n";
    }
    return kOk;
}

int run_table(const Settings& s, OutputFormat fmt, const Progress& progress)
{
    TableOptions topts;
    topts.pipeline = pipeline_options(s, !s.printed_delta22);
    topts.repetitions = s.no_naive ? 0 : s.repetitions;
    topts.progress = [&](const std::string& m) { progress(m); };
    const TableResult result = run_published_table(s.table_id, topts);

    if (fmt == OutputFormat::json) {
        Json config = config_json(s, "table", result.squared_delta22);
        config["table"] = s.table_id;
        config["repetitions"] = topts.repetitions;
        Json doc = document("table", config);
        doc["caption"] = result.table.caption;
        doc["all_within"] = result.all_within();
        for (const auto& row : result.rows) doc["reports"].push_back(table_row_json(row));
        emit_json(doc);
    } else if (fmt == OutputFormat::csv) {
        std::cout << table_csv(result);
    } else {
        std::cout << table_text(result);
    }
    if (!result.all_within()) std::cerr << "table " << s.table_id << ": deviations outside tolerance\n";
    return result.all_within() ? kOk : kRegression;
}

void add_common_options(CLI::App& app, Settings& s)
{
    app.add_option("--model", s.model, "cell law: bernoulli:p=P, binomial:m=M,p=P or poisson:lambda=L")
        ->delimiter(',')
        ->multi_option_policy(CLI::MultiOptionPolicy::Join);
    app.add_option("--region", s.region, "region extents T1,T2,T3")
        ->delimiter(',')
        ->multi_option_policy(CLI::MultiOptionPolicy::Join);
    app.add_option("--window", s.window, "window extents m1,m2,m3")
        ->delimiter(',')
        ->multi_option_policy(CLI::MultiOptionPolicy::Join);
    app.add_option("--n", s.n, "thresholds: 5, 1..3 or 1..3,7")
        ->delimiter(',')
        ->multi_option_policy(CLI::MultiOptionPolicy::Join);
    app.add_option("--iterations", s.iterations, "importance-sampling iterations per Q_rts")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--repetitions", s.repetitions, "naive Monte Carlo repetitions")->capture_default_str();
    app.add_option("--seed", s.seed, "master seed (SCAN3D_SEED overrides)")->capture_default_str();
    app.add_option("--format", s.format, "output format")
        ->check(CLI::IsMember({"json", "csv", "text"}))
        ->capture_default_str();
    app.add_flag("--squared-delta22", s.squared_delta22, "square delta_22 inside delta_2 (approx, critical)");
    app.add_flag("--printed-delta22", s.printed_delta22, "table: use the unsquared delta_22 form");
    app.add_option("--step4-threshold", s.step4, "exceedance threshold inside each IS iteration")
        ->check(CLI::IsMember({"tau", "sampled-T"}))
        ->capture_default_str();
    app.add_option("--l-rule", s.l_rule, "choice of l in the error factor F")
        ->check(CLI::IsMember({"infimum", "minimize"}))
        ->capture_default_str();
    app.add_flag("--no-monotone-enforce", s.no_monotone, "skip Q_3.. <= Q_2.. enforcement");
    app.add_option("--threads", s.threads, "worker threads (0 = all cores)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    app.add_option("--significance", s.significance, "critical: significance level")->capture_default_str();
    app.add_flag("--conservative", s.conservative, "critical: add the total error to each tail");
    app.add_flag("--no-naive", s.no_naive, "table: skip the naive Monte Carlo column");
    app.add_flag("--quiet", s.quiet, "no progress on stderr");
}

} // namespace

int main(int argc, char** argv)
{
    Settings s;
    CLI::App app{"Three-dimensional discrete scan statistic: approximation, error bounds and simulation"};
    app.name("scan3d");
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "key=value file mirroring long option names (command-line flags win)");
    add_common_options(app, s);

    auto* approx = app.add_subcommand("approx", "approximate P(S <= n) with error bounds");
    auto* simulate = app.add_subcommand("simulate", "naive Monte Carlo estimate of P(S <= n)");
    auto* critical = app.add_subcommand("critical", "critical value for a significance level");
    auto* table = app.add_subcommand("table", "recompute a published table and compare");
    table->add_option("id", s.table_id, "table number")->required()->check(CLI::Range(1, 4));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }

    if (const char* env = std::getenv("SCAN3D_SEED"); env && *env) {
        try {
            s.seed = detail::parse_number<std::uint64_t>(env, "SCAN3D_SEED");
        } catch (const ParameterError& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kUsage;
        }
    }

    const OutputFormat fmt = output_format(s.format);
    const Progress progress(s.quiet);
    try {
        int code = kOk;
        if (approx->parsed()) code = run_approx(s, fmt, progress);
        else if (simulate->parsed()) code = run_simulate(s, fmt, progress);
        else if (critical->parsed()) code = run_critical(s, fmt, progress);
        else if (table->parsed()) code = run_table(s, fmt, progress);
        progress.done();
        return code;
    } catch (const UnreachableError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInapplicable;
    } catch (const BoundValidityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInapplicable;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
}
