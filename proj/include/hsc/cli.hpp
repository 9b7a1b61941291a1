#pragma once

// Command-line support: distribution-spec grammar, single-point analysis
// reports, (dist, rho, u0) sweeps and figure reproduction with CSV/JSON output.

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "hsc/analytic.hpp"
#include "hsc/distributions.hpp"
#include "hsc/errors.hpp"
#include "hsc/simulate.hpp"
#include "hsc/version.hpp"

namespace hsc::cli {

/// Parses `exp:mean=<float>`, `det:mean=<float>` or `unif:mean=<float>` (case-insensitive).
inline DistributionSpec parse_distribution_spec(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });

    const std::size_t colon = lower.find(':');
    const std::string_view head = std::string_view(lower).substr(0, colon);
    PacketLaw law;
    if (head == "exp") {
        law = PacketLaw::Exponential;
    } else if (head == "det") {
        law = PacketLaw::Deterministic;
    } else if (head == "unif") {
        law = PacketLaw::Uniform;
    } else {
        throw ParseError("expected one of 'exp', 'det', 'unif' in distribution spec '" + std::string(text) + "'", 0);
    }
    if (colon == std::string::npos) {
        throw ParseError("expected ':' after '" + std::string(head) + "'", head.size());
    }
    constexpr std::string_view key = "mean=";
    std::size_t pos = colon + 1;
    if (lower.compare(pos, key.size(), key) != 0) {
        throw ParseError("expected 'mean=' in distribution spec '" + std::string(text) + "'", pos);
    }
    pos += key.size();
    double mean = 0.0;
    const char* first = lower.data() + pos;
    const char* last = lower.data() + lower.size();
    const auto [ptr, ec] = std::from_chars(first, last, mean);
    if (ec != std::errc{} || ptr == first) {
        throw ParseError("expected a number after 'mean='", pos);
    }
    if (ptr != last) {
        throw ParseError("unexpected trailing input", static_cast<std::size_t>(ptr - lower.data()));
    }
    if (!(mean > 0.0) || !std::isfinite(mean)) {
        throw ValueError("packet mean must be positive and finite in '" + std::string(text) + "'");
    }
    return {law, mean};
}

/// Shortest decimal text that parses back to exactly `x`.
inline std::string format_number(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

inline double parse_number(std::string_view text, std::string_view what) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
        throw ParseError("invalid number '" + std::string(text) + "' for " + std::string(what),
                         static_cast<std::size_t>(ptr - text.data()));
    }
    return value;
}

inline std::vector<std::string_view> split(std::string_view text, char sep) {
    std::vector<std::string_view> parts;
    while (true) {
        const std::size_t at = text.find(sep);
        parts.push_back(text.substr(0, at));
        if (at == std::string_view::npos) return parts;
        text.remove_prefix(at + 1);
    }
}

/// Either a comma list "0,5,10" or an inclusive range "start:step:stop".
inline std::vector<double> parse_grid(std::string_view text, std::string_view what) {
    std::vector<double> out;
    if (text.find(':') != std::string_view::npos) {
        const auto parts = split(text, ':');
        if (parts.size() != 3) throw ParseError(std::string(what) + " range must be start:step:stop", 0);
        const double start = parse_number(parts[0], what);
        const double step = parse_number(parts[1], what);
        const double stop = parse_number(parts[2], what);
        if (!(step > 0.0) || !(stop >= start)) {
            throw ValueError(std::string(what) + " range needs step > 0 and stop >= start");
        }
        const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
        for (std::size_t k = 0; k < count; ++k) out.push_back(start + static_cast<double>(k) * step);
    } else {
        for (auto part : split(text, ',')) out.push_back(parse_number(part, what));
    }
    return out;
}

struct SweepSpec {
    std::vector<double> u0_grid;
    std::vector<double> rho_list;
    std::vector<DistributionSpec> dist_list;
    double p = 1.0;
    std::uint64_t trials = 0;  // 0: analytic columns only
    double horizon = 1000.0;
    std::uint64_t seed = 1;
    RunOptions run;

    void validate() const {
        if (u0_grid.empty() || rho_list.empty() || dist_list.empty()) throw ValueError("sweep grids must be nonempty");
        for (double rho : rho_list) {
            if (!(rho > 0.0)) throw ValueError("every rho must be positive");
        }
        for (double u : u0_grid) {
            if (!(u >= 0.0)) throw ValueError("every u0 must be nonnegative");
        }
        if (!(p > 0.0)) throw ValueError("p must be positive");
        if (trials > 0 && !(horizon > 0.0)) throw ValueError("horizon must be positive");
    }
};

struct ResultRow {
    std::string dist;
    double rho = 0.0;
    double u0 = 0.0;
    std::optional<double> r_star;
    std::optional<double> psi_exact;
    std::optional<double> psi_bound;
    std::optional<double> psi_mc;
    std::optional<double> ci_lo;
    std::optional<double> ci_hi;
    std::uint64_t trials = 0;
    double horizon = 0.0;
    std::uint64_t seed = 0;

    friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

inline constexpr std::string_view kCsvHeader = "dist,rho,u0,r_star,psi_exact,psi_bound,psi_mc,ci_lo,ci_hi,trials,horizon,seed";

inline void write_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
    const auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
    os << kCsvHeader << '\n';
    for (const auto& r : rows) {
        os << r.dist << ',' << format_number(r.rho) << ',' << format_number(r.u0) << ',' << opt(r.r_star) << ','
           << opt(r.psi_exact) << ',' << opt(r.psi_bound) << ',' << opt(r.psi_mc) << ',' << opt(r.ci_lo) << ','
           << opt(r.ci_hi) << ',' << r.trials << ',' << format_number(r.horizon) << ',' << r.seed << '\n';
    }
}

inline std::vector<ResultRow> read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != kCsvHeader) throw ParseError("missing or unexpected CSV header", 0);
    std::vector<ResultRow> rows;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 12) throw ParseError("expected 12 fields on CSV line " + std::to_string(line_no), 0);
        const auto opt = [](std::string_view s) -> std::optional<double> {
            if (s.empty()) return std::nullopt;
            return parse_number(s, "CSV field");
        };
        const auto integer = [](std::string_view s) {
            std::uint64_t v = 0;
            const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc{} || ptr != s.data() + s.size()) throw ParseError("invalid integer '" + std::string(s) + "'", 0);
            return v;
        };
        ResultRow r;
        r.dist = std::string(f[0]);
        r.rho = parse_number(f[1], "rho");
        r.u0 = parse_number(f[2], "u0");
        r.r_star = opt(f[3]);
        r.psi_exact = opt(f[4]);
        r.psi_bound = opt(f[5]);
        r.psi_mc = opt(f[6]);
        r.ci_lo = opt(f[7]);
        r.ci_hi = opt(f[8]);
        r.trials = integer(f[9]);
        r.horizon = parse_number(f[10], "horizon");
        r.seed = integer(f[11]);
        rows.push_back(std::move(r));
    }
    return rows;
}

namespace detail {

/// Re-throws the in-flight hsc::Error with `context` prefixed, keeping its type.
[[noreturn]] inline void rethrow_with_context(const std::string& context) {
    try {
        throw;
    } catch (const ParseError& e) {
        throw ParseError(context + e.what(), e.position());
    } catch (const ValueError& e) {
        throw ValueError(context + e.what());
    } catch (const DomainError& e) {
        throw DomainError(context + e.what());
    } catch (const PreconditionError& e) {
        throw PreconditionError(context + e.what());
    } catch (const ConvergenceError& e) {
        throw ConvergenceError(context + e.what());
    } catch (const GridError& e) {
        throw GridError(context + e.what());
    } catch (const IoError& e) {
        throw IoError(context + e.what());
    }
}

}  // namespace detail

/// One row per (dist, rho, u0). For rho <= 1 eventual outage is certain, so
/// psi_exact is 1 and r*/bound are absent. Monte-Carlo columns share one set of
/// paths per (dist, rho) series, all seeded with spec.seed.
inline std::vector<ResultRow> run_sweep(const SweepSpec& spec) {
    spec.validate();
    std::vector<ResultRow> rows;
    rows.reserve(spec.dist_list.size() * spec.rho_list.size() * spec.u0_grid.size());
    for (const auto& dist : spec.dist_list) {
        for (double rho : spec.rho_list) {
            const std::string series = to_string(dist) + " rho=" + format_number(rho);
            try {
                const SystemParams base = SystemParams::from_utilization(rho, dist, spec.p);
                const bool sustainable = utilization(base).status == Sustainability::SelfSustainablePossible;
                std::optional<AdjustmentResult> adj;
                if (sustainable) adj = solve_adjustment_coefficient(base);
                std::vector<EstimateWithCI> mc;
                if (spec.trials > 0) mc = estimate_outage_curve(base, spec.u0_grid, spec.horizon, spec.trials, spec.seed, spec.run);

                for (std::size_t j = 0; j < spec.u0_grid.size(); ++j) {
                    ResultRow row;
                    row.dist = to_string(dist);
                    row.rho = rho;
                    row.u0 = spec.u0_grid[j];
                    row.trials = spec.trials;
                    row.horizon = spec.horizon;
                    row.seed = spec.seed;
                    SystemParams params = base;
                    params.u0 = row.u0;
                    if (adj) {
                        row.r_star = adj->r_star;
                        row.psi_exact = eventual_outage_poisson_exact(params, adj->r_star);
                        row.psi_bound = outage_bound(adj->r_star, row.u0);
                    } else {
                        row.psi_exact = 1.0;
                    }
                    if (!mc.empty()) {
                        row.psi_mc = mc[j].estimate;
                        row.ci_lo = mc[j].ci95_lo;
                        row.ci_hi = mc[j].ci95_hi;
                    }
                    rows.push_back(std::move(row));
                }
            } catch (const Error&) {
                detail::rethrow_with_context("sweep point " + series + ": ");
            }
        }
    }
    return rows;
}

struct AnalysisReport {
    SystemParams params;
    SustainabilityVerdict verdict;
    std::optional<AdjustmentResult> adjustment{};
    std::optional<AdjustmentApprox> approx{};
    std::optional<double> theta{};
    std::optional<double> psi_exact{};
    std::optional<double> psi_bound{};
    std::optional<double> psi_asymptotic{};
    std::vector<std::pair<double, double>> required_u0{};  // (epsilon, u0)
    double eventual_outage = 1.0;
    std::optional<double> stationary_outage{};
    std::vector<std::pair<double, double>> outage_duration_quantiles{};  // (level, duration)
};

inline constexpr std::array<double, 3> kEpsilonLevels{0.1, 0.01, 0.001};
inline constexpr std::array<double, 3> kDurationLevels{0.5, 0.9, 0.99};

inline AnalysisReport run_analyze(const SystemParams& params) {
    params.validate();
    AnalysisReport rep{.params = params, .verdict = utilization(params)};
    if (rep.verdict.status == Sustainability::SelfSustainablePossible) {
        rep.adjustment = solve_adjustment_coefficient(params);
        rep.approx = approx_adjustment_coefficient(params);
        const double r = rep.adjustment->r_star;
        rep.theta = poisson_ladder_mass(params, r);
        rep.psi_exact = eventual_outage_poisson_exact(params, r);
        rep.psi_bound = outage_bound(r, params.u0);
        rep.psi_asymptotic = asymptotic_outage(*rep.theta, r, poisson_tilted_ladder_mean(params, r), params.u0);
        rep.eventual_outage = *rep.psi_exact;
        for (double eps : kEpsilonLevels) rep.required_u0.emplace_back(eps, required_initial_energy(r, eps));
    } else if (rep.verdict.rho < 1.0) {
        rep.stationary_outage = stationary_outage(params);
        for (double q : kDurationLevels) rep.outage_duration_quantiles.emplace_back(q, outage_duration_quantile(params, q));
    }
    return rep;
}

inline nlohmann::ordered_json to_json(const AnalysisReport& rep) {
    nlohmann::ordered_json j;
    j["params"] = {{"lambda", rep.params.lambda},
                   {"dist", to_string(rep.params.packet)},
                   {"p", rep.params.p},
                   {"u0", rep.params.u0}};
    j["rho"] = rep.verdict.rho;
    j["verdict"] = to_string(rep.verdict.status);
    if (rep.adjustment) {
        j["r_star"] = rep.adjustment->r_star;
        j["r_star_method"] = to_string(rep.adjustment->method);
        j["r_star_residual"] = rep.adjustment->residual;
        j["r_star_iterations"] = rep.adjustment->iterations;
        j["r_star_approx"] = {{"quadratic_fixed_point", rep.approx->quadratic_fixed_point},
                              {"mean_variance_guess", rep.approx->mean_variance_guess}};
        j["theta"] = *rep.theta;
        j["psi_exact"] = *rep.psi_exact;
        j["psi_bound"] = *rep.psi_bound;
        j["psi_asymptotic"] = *rep.psi_asymptotic;
        auto& req = j["required_u0"] = nlohmann::ordered_json::array();
        for (const auto& [eps, u] : rep.required_u0) req.push_back({{"epsilon", eps}, {"u0", u}});
    }
    j["eventual_outage"] = rep.eventual_outage;
    if (rep.stationary_outage) {
        j["stationary_outage"] = *rep.stationary_outage;
        auto& dur = j["outage_duration_quantiles"] = nlohmann::ordered_json::array();
        for (const auto& [q, d] : rep.outage_duration_quantiles) dur.push_back({{"level", q}, {"duration", d}});
    }
    return j;
}

struct ReproduceOptions {
    std::uint64_t trials = 50000;
    double horizon = 1000.0;
    std::uint64_t seed = 42;
    RunOptions run;
    std::vector<double> u0_grid = parse_grid("0:2:40", "u0");
    std::vector<double> rho_grid{1.1, 1.2, 1.3};
    double comparison_rho = 1.1;
    double p = 1.0;
    double packet_mean = 1.0;
};

struct ReproduceOutput {
    std::filesystem::path csv;
    std::filesystem::path manifest;
    std::vector<ResultRow> rows;
};

/// Sweep behind one figure: 2 = exponential, 3 = deterministic, 4 = uniform
/// packets over the rho grid; 5 = all three laws at the comparison rho.
inline SweepSpec figure_sweep(int figure, const ReproduceOptions& opts) {
    SweepSpec spec;
    spec.u0_grid = opts.u0_grid;
    spec.p = opts.p;
    spec.trials = opts.trials;
    spec.horizon = opts.horizon;
    spec.seed = opts.seed;
    spec.run = opts.run;
    const double m = opts.packet_mean;
    switch (figure) {
        case 2: spec.dist_list = {DistributionSpec::exponential(m)}; break;
        case 3: spec.dist_list = {DistributionSpec::deterministic(m)}; break;
        case 4: spec.dist_list = {DistributionSpec::uniform(m)}; break;
        case 5:
            spec.dist_list = {DistributionSpec::deterministic(m), DistributionSpec::uniform(m),
                              DistributionSpec::exponential(m)};
            break;
        default: throw ValueError("figure must be one of 2, 3, 4, 5 (got " + std::to_string(figure) + ")");
    }
    spec.rho_list = figure == 5 ? std::vector<double>{opts.comparison_rho} : opts.rho_grid;
    return spec;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << content;
    out.close();
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

/// Writes figure<N>.csv and figure<N>_manifest.json into out_dir.
inline ReproduceOutput run_reproduce(int figure, const std::filesystem::path& out_dir, const ReproduceOptions& opts) {
    const SweepSpec spec = figure_sweep(figure, opts);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + out_dir.string() + "': " + ec.message());

    ReproduceOutput out;
    out.rows = run_sweep(spec);
    const std::string stem = "figure" + std::to_string(figure);
    out.csv = out_dir / (stem + ".csv");
    out.manifest = out_dir / (stem + "_manifest.json");

    std::ostringstream csv;
    write_csv(csv, out.rows);
    write_file(out.csv, csv.str());

    nlohmann::ordered_json manifest;
    manifest["figure"] = figure;
    nlohmann::ordered_json dists = nlohmann::ordered_json::array();
    for (const auto& d : spec.dist_list) dists.push_back(to_string(d));
    manifest["params"] = {{"p", spec.p},
                          {"packet_mean", opts.packet_mean},
                          {"dists", dists},
                          {"arrivals", "poisson"},
                          {"trials", spec.trials},
                          {"horizon", spec.horizon},
                          {"csv", out.csv.filename().string()}};
    manifest["grids"] = {{"u0", spec.u0_grid}, {"rho", spec.rho_list}};
    manifest["seed"] = spec.seed;
    manifest["tool_version"] = std::string(kVersion);
    write_file(out.manifest, manifest.dump(2) + "\n");
    return out;
}

}  // namespace hsc::cli
