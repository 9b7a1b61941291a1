// hsc: eventual-outage analysis and simulation for harvest-store-consume systems.
//
//   hsc analyze   --lambda 1.1 --dist exp:mean=1 --p 1 --u0 10
//   hsc simulate  --rho 1.1 --dist det:mean=1 --u0 5 --trials 50000
//   hsc sweep     --dist exp:mean=1 --rho 1.1,1.2 --u0 0:2:40 --out sweep.csv
//   hsc reproduce --figure 5 --seed 42 --out figures/

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hsc/cli.hpp"
#include "hsc/hsc.hpp"

namespace {

enum ExitCode : int { kOk = 0, kUsage = 2, kNumeric = 3, kIo = 4 };

struct Settings {
    std::uint64_t seed = 42;
    std::uint64_t trials = 50000;
    double horizon = 1000.0;
    std::string out;
    unsigned workers = 0;
    std::string config;
    std::string ci = "normal";

    std::optional<double> lambda;
    std::vector<std::string> dist{"exp:mean=1"};
    double p = 1.0;
    std::string u0 = "0";
    std::string rho_grid;

    int figure = 5;
    std::uint64_t lindley_steps = 0;
    std::uint64_t burn_in = 0;
    bool path = false;
};

/// Fills every setting whose flag was not given from the JSON config file.
void apply_config(const CLI::App& app, Settings& s) {
    if (s.config.empty()) return;
    std::ifstream in(s.config);
    if (!in) throw hsc::IoError("cannot read config file '" + s.config + "'");
    nlohmann::json cfg;
    try {
        cfg = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw hsc::ParseError(std::string("invalid JSON in config: ") + e.what(), 0);
    }
    if (!cfg.is_object()) throw hsc::ParseError("config must be a JSON object", 0);

    const auto given = [&](const std::string& flag) {
        for (const CLI::App* a : {&app, app.get_subcommands().empty() ? &app : app.get_subcommands().front()}) {
            try {
                if (a->get_option(flag)->count() > 0) return true;
            } catch (const CLI::OptionNotFound&) {
            }
        }
        return false;
    };
    const auto as_text = [](const nlohmann::json& v) {
        return v.is_string() ? v.get<std::string>() : v.dump();
    };
    try {
        for (const auto& [key, value] : cfg.items()) {
            const std::string flag = "--" + key;
            if (given(flag)) continue;
            if (key == "seed") s.seed = value.get<std::uint64_t>();
            else if (key == "trials") s.trials = value.get<std::uint64_t>();
            else if (key == "horizon") s.horizon = value.get<double>();
            else if (key == "out") s.out = value.get<std::string>();
            else if (key == "workers") s.workers = value.get<unsigned>();
            else if (key == "ci") s.ci = value.get<std::string>();
            else if (key == "lambda") s.lambda = value.get<double>();
            else if (key == "rho") {
                if (value.is_array()) {
                    s.rho_grid.clear();
                    for (const auto& r : value) s.rho_grid += (s.rho_grid.empty() ? "" : ",") + as_text(r);
                } else {
                    s.rho_grid = as_text(value);
                }
            } else if (key == "dist") {
                s.dist.clear();
                if (value.is_array()) {
                    for (const auto& d : value) s.dist.push_back(d.get<std::string>());
                } else {
                    s.dist.push_back(value.get<std::string>());
                }
            } else if (key == "p") s.p = value.get<double>();
            else if (key == "u0") s.u0 = as_text(value);
            else if (key == "figure") s.figure = value.get<int>();
            else throw hsc::ParseError("unknown config key '" + key + "'", 0);
        }
    } catch (const nlohmann::json::exception& e) {
        throw hsc::ParseError(std::string("bad config value: ") + e.what(), 0);
    }
}

hsc::RunOptions run_options(const Settings& s) {
    hsc::RunOptions opts;
    opts.workers = s.workers;
    if (s.ci == "normal") opts.ci = hsc::CiMethod::Normal;
    else if (s.ci == "wilson") opts.ci = hsc::CiMethod::Wilson;
    else throw hsc::ValueError("--ci must be 'normal' or 'wilson'");
    return opts;
}

hsc::SystemParams single_point(const Settings& s) {
    if (s.dist.size() != 1) throw hsc::ValueError("exactly one --dist is required here");
    const hsc::DistributionSpec packet = hsc::cli::parse_distribution_spec(s.dist.front());
    const double u0 = hsc::cli::parse_number(s.u0, "u0");
    std::optional<double> rho;
    if (!s.rho_grid.empty()) rho = hsc::cli::parse_number(s.rho_grid, "rho");
    if (s.lambda && rho) throw hsc::ValueError("give either --lambda or --rho, not both");
    if (rho) return hsc::SystemParams::from_utilization(*rho, packet, s.p, u0);
    hsc::SystemParams params{s.lambda.value_or(1.1), packet, s.p, u0};
    params.validate();
    return params;
}

/// Writes to --out when given, otherwise stdout.
void emit(const Settings& s, const std::string& text) {
    if (s.out.empty()) {
        std::cout << text;
        return;
    }
    hsc::cli::write_file(s.out, text);
}

nlohmann::ordered_json to_json(const hsc::EstimateWithCI& e) {
    return {{"estimate", e.estimate}, {"stderr", e.std_error}, {"ci95_lo", e.ci95_lo}, {"ci95_hi", e.ci95_hi},
            {"outages", e.successes}, {"trials", e.trials},    {"horizon", e.horizon}, {"seed", e.seed}};
}

int cmd_analyze(const Settings& s) {
    const auto report = hsc::cli::run_analyze(single_point(s));
    emit(s, hsc::cli::to_json(report).dump(2) + "\n");
    return kOk;
}

int cmd_simulate(const Settings& s) {
    const hsc::SystemParams params = single_point(s);
    const hsc::RunOptions opts = run_options(s);
    nlohmann::ordered_json j;
    j["params"] = {{"lambda", params.lambda}, {"dist", hsc::to_string(params.packet)}, {"p", params.p}, {"u0", params.u0}};
    j["rho"] = hsc::utilization(params).rho;
    if (s.trials > 0) j["eventual_outage"] = to_json(hsc::estimate_eventual_outage(params, s.horizon, s.trials, s.seed, opts));
    if (s.lindley_steps > 0) {
        const std::uint64_t burn = s.burn_in ? s.burn_in : s.lindley_steps / 10;
        hsc::PoissonEventSource source(params.lambda, params.packet, hsc::make_stream(s.seed, 0));
        const auto stats = hsc::simulate_lindley(params, s.lindley_steps, burn, source);
        j["battery"] = {{"time_empty_fraction", stats.time_empty_fraction},
                        {"arrival_empty_fraction", stats.arrival_empty_fraction},
                        {"steps", stats.steps},
                        {"burn_in", stats.burn_in},
                        {"stationary_outage_exact", hsc::stationary_outage(params)}};
    }
    if (s.path) {
        hsc::PoissonEventSource source(params.lambda, params.packet, hsc::make_stream(s.seed, 0));
        auto& pts = j["path"] = nlohmann::ordered_json::array();
        for (const auto& pt : hsc::record_path(params, s.horizon, source)) pts.push_back({pt.t, pt.surplus});
    }
    emit(s, j.dump(2) + "\n");
    return kOk;
}

int cmd_sweep(const Settings& s) {
    hsc::cli::SweepSpec spec;
    spec.u0_grid = hsc::cli::parse_grid(s.u0, "u0");
    if (s.rho_grid.empty()) throw hsc::ValueError("sweep needs --rho");
    spec.rho_list = hsc::cli::parse_grid(s.rho_grid, "rho");
    for (const auto& d : s.dist) spec.dist_list.push_back(hsc::cli::parse_distribution_spec(d));
    spec.p = s.p;
    spec.trials = s.trials;
    spec.horizon = s.horizon;
    spec.seed = s.seed;
    spec.run = run_options(s);
    std::ostringstream csv;
    hsc::cli::write_csv(csv, hsc::cli::run_sweep(spec));
    emit(s, csv.str());
    return kOk;
}

int cmd_reproduce(const Settings& s, bool u0_given, bool rho_given) {
    hsc::cli::ReproduceOptions opts;
    opts.trials = s.trials;
    opts.horizon = s.horizon;
    opts.seed = s.seed;
    opts.run = run_options(s);
    if (u0_given) opts.u0_grid = hsc::cli::parse_grid(s.u0, "u0");
    if (rho_given) {
        opts.rho_grid = hsc::cli::parse_grid(s.rho_grid, "rho");
        opts.comparison_rho = opts.rho_grid.front();
    }
    const auto out = hsc::cli::run_reproduce(s.figure, s.out.empty() ? "." : s.out, opts);
    std::cout << out.csv.string() << '\n' << out.manifest.string() << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    Settings s;
    CLI::App app{"Eventual energy-outage analysis for harvest-store-consume systems"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", std::string(hsc::kVersion));
    app.add_option("--seed", s.seed, "Master seed for Monte-Carlo streams");
    app.add_option("--trials", s.trials, "Monte-Carlo trials per point (0 disables simulation)");
    app.add_option("--horizon", s.horizon, "Simulated time horizon per trial");
    app.add_option("--out", s.out, "Output file (analyze/simulate/sweep) or directory (reproduce)");
    app.add_option("--workers", s.workers, "Worker threads (0 = hardware concurrency)");
    app.add_option("--config", s.config, "JSON file with the same keys as the flags; flags win");
    app.add_option("--ci", s.ci, "Confidence interval: normal or wilson");

    const auto add_point_options = [&](CLI::App* sub) {
        sub->add_option("--lambda", s.lambda, "Packet arrival rate");
        sub->add_option("--rho", s.rho_grid, "Utilization lambda*mean/p (alternative to --lambda)");
        sub->add_option("--dist", s.dist, "Packet law: exp:mean=X, det:mean=X or unif:mean=X");
        sub->add_option("--p", s.p, "Consumption rate");
        sub->add_option("--u0", s.u0, "Initial battery energy");
    };

    CLI::App* analyze = app.add_subcommand("analyze", "Closed-form and numeric analysis of one operating point");
    add_point_options(analyze);

    CLI::App* simulate = app.add_subcommand("simulate", "Monte-Carlo estimate at one operating point");
    add_point_options(simulate);
    simulate->add_option("--lindley-steps", s.lindley_steps, "Also run the battery recursion for this many arrivals");
    simulate->add_option("--burn-in", s.burn_in, "Burn-in arrivals for the battery recursion (default 10%)");
    simulate->add_flag("--path", s.path, "Include the sawtooth breakpoints of trial 0");

    CLI::App* sweep = app.add_subcommand("sweep", "CSV over a (dist, rho, u0) grid");
    sweep->add_option("--dist", s.dist, "Packet law (repeatable)");
    sweep->add_option("--rho", s.rho_grid, "rho list or start:step:stop");
    sweep->add_option("--u0", s.u0, "u0 list or start:step:stop");
    sweep->add_option("--p", s.p, "Consumption rate");

    CLI::App* reproduce = app.add_subcommand("reproduce", "Write the data behind one outage-probability figure");
    reproduce->add_option("--figure", s.figure, "2 exp, 3 det, 4 unif, 5 comparison")->check(CLI::IsMember({2, 3, 4, 5}));
    CLI::Option* rep_u0 = reproduce->add_option("--u0", s.u0, "u0 grid (default 0:2:40)");
    CLI::Option* rep_rho = reproduce->add_option("--rho", s.rho_grid, "rho grid (default 1.1,1.2,1.3)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        apply_config(app, s);
        if (analyze->parsed()) return cmd_analyze(s);
        if (simulate->parsed()) return cmd_simulate(s);
        if (sweep->parsed()) {
            if (s.u0 == "0" && sweep->get_option("--u0")->count() == 0 && s.config.empty()) s.u0 = "0:2:40";
            return cmd_sweep(s);
        }
        if (reproduce->parsed()) {
            const bool u0_given = rep_u0->count() > 0 || s.u0 != "0";
            return cmd_reproduce(s, u0_given, rep_rho->count() > 0 || !s.rho_grid.empty());
        }
    } catch (const hsc::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const hsc::ValueError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const hsc::PreconditionError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const hsc::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIo;
    } catch (const hsc::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNumeric;
    }
    return kUsage;
}
