// Command-line front end: experiment configuration, seed management, campaign
// orchestration, result persistence, and table emission.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "slelab/config.hpp"
#include "slelab/experiments.hpp"
#include "slelab/hitmap.hpp"
#include "slelab/store.hpp"

namespace {

using nlohmann::json;
using namespace slelab;

struct FlagSet {
    std::string config_file;
    std::string results_dir;
    bool force = false;
    json flags = json::object();
};

// record skeleton shared by every experiment row
json base_record(const CliConfig& cfg) {
    const SleParams p = sle_params(cfg.kappa);
    return json{
        {"experiment", cfg.experiment},
        {"kappa", cfg.kappa},
        {"a", p.a},
        {"s", p.s},
        {"beta", p.beta},
        {"n_samples", cfg.samples},
        {"seed", cfg.seed},
    };
}

void put_estimate(json& rec, const Estimate& e) {
    rec["estimate"] = e.value;
    rec["stderr"] = e.stderr_;
    rec["ci_lo"] = e.ci_lo;
    rec["ci_hi"] = e.ci_hi;
}

int finish_run(const CliConfig& cfg, const FlagSet& fs, const std::vector<json>& records,
               const std::string& started, bool warning) {
    const char* env = std::getenv("SLELAB_RESULTS");
    const std::string dir = !fs.results_dir.empty() ? fs.results_dir
                            : env                   ? std::string(env)
                                                    : std::string("results");
    ResultStore store(dir);
    RunManifest manifest;
    manifest.config = cfg.to_json();
    manifest.run_id = run_id_for(manifest.config);
    manifest.started = started;
    manifest.finished = iso_timestamp();
    store.write_run(manifest, records, fs.force);
    std::printf("run %s: %zu record(s) -> %s\n", manifest.run_id.c_str(), records.size(),
                store.records_file(manifest.run_id).string().c_str());
    return warning ? 2 : 0;
}

CliConfig assemble(const FlagSet& fs, const std::string& experiment) {
    CliConfig cfg;
    if (!fs.config_file.empty()) cfg = parse_config_file(fs.config_file);
    apply_json(cfg, fs.flags, "flag");
    cfg.experiment = experiment;
    for (const auto& line : echo_config(cfg)) std::printf("  %s\n", line.c_str());
    return cfg;
}

int cmd_hit(const FlagSet& fs) {
    CliConfig cfg = assemble(fs, "hit");
    const std::string started = iso_timestamp();
    sle_params_hitting(cfg.kappa); // rejects kappa outside (4, 8) with the admissible range
    auto res = one_interval_experiment(cfg.experiment_config(), cfg.y, cfg.x);
    json rec = base_record(cfg);
    rec["y"] = cfg.y;
    rec["x"] = cfg.x;
    put_estimate(rec, res.estimate);
    rec["exact_or_bound"] = res.exact;
    rec["censored"] = res.censored_fraction;
    std::printf("P(hit [%g, %g])  exact %.6f  estimate %.6f +- %.6f  ci99 [%.6f, %.6f]\n", cfg.y,
                cfg.x, res.exact, res.estimate.value, res.estimate.stderr_, res.estimate.ci_lo,
                res.estimate.ci_hi);
    if (res.reliability_warning)
        std::printf("warning: censored fraction %.2f%% exceeds 1%% under bit policy\n",
                    100.0 * res.censored_fraction);
    return finish_run(cfg, fs, {rec}, started, res.reliability_warning);
}

int cmd_two_hit(const FlagSet& fs) {
    CliConfig cfg = assemble(fs, "two-hit");
    const std::string started = iso_timestamp();
    sle_params_hitting(cfg.kappa);
    std::vector<json> records;
    bool warn = false;
    std::printf("%-10s %-12s %-12s %-12s %-10s\n", "eps", "estimate", "stderr", "bound-shape",
                "closed%");
    for (double eps : cfg.eps) {
        auto res = two_interval_experiment(cfg.experiment_config(), cfg.y, cfg.x, eps);
        json rec = base_record(cfg);
        rec["y"] = cfg.y;
        rec["x"] = cfg.x;
        rec["eps"] = eps;
        put_estimate(rec, res.estimate);
        rec["exact_or_bound"] = res.bound_shape;
        rec["censored"] = res.censored_fraction;
        records.push_back(rec);
        warn = warn || res.reliability_warning;
        std::printf("%-10g %-12.6f %-12.6f %-12.6f %-10.2f\n", eps, res.estimate.value,
                    res.estimate.stderr_, res.bound_shape, 100.0 * res.censored_fraction);
    }
    if (warn)
        std::printf("warning: jointly censored samples closed with the product approximation\n");
    return finish_run(cfg, fs, records, started, warn);
}

int cmd_dimension(const FlagSet& fs) {
    CliConfig cfg = assemble(fs, "dimension");
    const std::string started = iso_timestamp();
    sle_params_hitting(cfg.kappa);
    auto res = dimension_experiment(cfg.experiment_config(), cfg.level_lo, cfg.level_hi);
    std::vector<json> records;
    std::printf("%-6s %-14s %-12s\n", "n", "mean N_n", "se");
    for (const auto& st : res.per_level) {
        json rec = base_record(cfg);
        rec["level"] = st.level;
        rec["estimate"] = st.mean_count;
        rec["stderr"] = st.se;
        rec["ci_lo"] = st.mean_count - z_99 * st.se;
        rec["ci_hi"] = st.mean_count + z_99 * st.se;
        rec["exact_or_bound"] = std::pow(2.0, sle_params(cfg.kappa).s * st.level);
        rec["censored"] = 0.0;
        records.push_back(rec);
        std::printf("%-6d %-14.4f %-12.4f\n", st.level, st.mean_count, st.se);
    }
    json fit = base_record(cfg);
    fit["levels"] = {cfg.level_lo, cfg.level_hi};
    fit["estimate"] = res.fit.slope;
    fit["stderr"] = res.fit.slope_stderr;
    fit["ci_lo"] = res.fit.slope - z_99 * res.fit.slope_stderr;
    fit["ci_hi"] = res.fit.slope + z_99 * res.fit.slope_stderr;
    fit["exact_or_bound"] = sle_params(cfg.kappa).s;
    fit["censored"] = 0.0;
    records.push_back(fit);
    std::printf("slope %.4f +- %.4f   (target %.4f)\n", res.fit.slope, res.fit.slope_stderr,
                sle_params(cfg.kappa).s);
    for (const auto& w : res.fit.warnings) std::printf("warning: %s\n", w.c_str());
    return finish_run(cfg, fs, records, started, !res.fit.warnings.empty());
}

int cmd_near_miss(const FlagSet& fs) {
    CliConfig cfg = assemble(fs, "near-miss");
    const std::string started = iso_timestamp();
    sle_params_hitting(cfg.kappa);
    auto res = near_miss_experiment(cfg.experiment_config(), cfg.x, cfg.y, cfg.radii);
    std::vector<json> records;
    std::printf("%-10s %-12s %-12s %-12s\n", "r", "estimate", "stderr", "asymptote");
    for (const auto& row : res.rows) {
        json rec = base_record(cfg);
        rec["y"] = cfg.y;
        rec["x"] = cfg.x;
        rec["r"] = row.radius;
        put_estimate(rec, row.estimate);
        rec["exact_or_bound"] = row.asymptote;
        rec["censored"] = res.censored_fraction;
        records.push_back(rec);
        std::printf("%-10g %-12.6f %-12.6f %-12.6f\n", row.radius, row.estimate.value,
                    row.estimate.stderr_, row.asymptote);
    }
    return finish_run(cfg, fs, records, started, false);
}

int cmd_scaling(const FlagSet& fs) {
    CliConfig cfg = assemble(fs, "scaling");
    const std::string started = iso_timestamp();
    sle_params_hitting(cfg.kappa);
    auto res = scaling_test(cfg.experiment_config(), cfg.x);
    json rec = base_record(cfg);
    rec["x"] = cfg.x;
    rec["estimate"] = res.ks.statistic;
    rec["stderr"] = 0.0;
    rec["ci_lo"] = 0.0;
    rec["ci_hi"] = 0.0;
    rec["p_value"] = res.ks.p_value;
    rec["exact_or_bound"] = 0.0;
    rec["censored"] =
        static_cast<double>(res.censored_pairs) / static_cast<double>(cfg.samples);
    std::printf("KS(T_%g vs %g^2 T_1): D = %.5f, p = %.4f, %lld censored pairs excluded\n", cfg.x,
                cfg.x, res.ks.statistic, res.ks.p_value,
                static_cast<long long>(res.censored_pairs));
    return finish_run(cfg, fs, {rec}, started, false);
}

int cmd_tables(const FlagSet& fs) {
    CliConfig cfg = assemble(fs, "tables");
    const std::string started = iso_timestamp();
    const HitMap hm(sle_params_hitting(cfg.kappa));
    const auto vs = parse_grid_spec(cfg.grid);
    std::printf("v,F_v\n");
    std::vector<json> records;
    for (double v : vs) {
        const double fv = hm.eval_real(v);
        std::printf("%.17g,%.17g\n", v, fv);
    }
    json rec = base_record(cfg);
    rec["grid"] = cfg.grid;
    rec["estimate"] = 0.0;
    rec["stderr"] = 0.0;
    rec["ci_lo"] = 0.0;
    rec["ci_hi"] = 0.0;
    rec["exact_or_bound"] = 0.0;
    rec["censored"] = 0.0;
    rec["rows"] = vs.size();
    return finish_run(cfg, fs, {rec}, started, false);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"slelab: chordal SLE boundary-hitting laboratory"};
    app.require_subcommand(1);

    FlagSet fs;
    app.add_option("--config", fs.config_file, "JSON config file");
    app.add_option("--results", fs.results_dir, "result store directory (or SLELAB_RESULTS)");
    app.add_flag("--force", fs.force, "overwrite an existing run id");

    // flag values land in a JSON overlay so provenance tracking sees them
    auto add_common = [&](CLI::App* sub) {
        auto opt_num = [&](const char* flag, const char* key) {
            sub->add_option_function<double>(
                flag, [&fs, key](const double& v) { fs.flags[key] = v; });
        };
        auto opt_int = [&](const char* flag, const char* key) {
            sub->add_option_function<std::int64_t>(
                flag, [&fs, key](const std::int64_t& v) { fs.flags[key] = v; });
        };
        auto opt_vec = [&](const char* flag, const char* key) {
            sub->add_option_function<std::vector<double>>(
                flag, [&fs, key](const std::vector<double>& v) { fs.flags[key] = v; });
        };
        auto opt_str = [&](const char* flag, const char* key) {
            sub->add_option_function<std::string>(
                flag, [&fs, key](const std::string& v) { fs.flags[key] = v; });
        };
        opt_num("--kappa", "kappa");
        opt_num("--dt", "dt");
        opt_int("--samples", "samples");
        opt_int("--seed", "seed");
        opt_int("--level", "level");
        sub->add_option_function<std::vector<int>>(
               "--levels", [&fs](const std::vector<int>& v) { fs.flags["levels"] = v; })
            ->expected(2);
        opt_num("--delta", "delta");
        opt_num("--y", "y");
        opt_num("--x", "x");
        opt_vec("--eps", "eps");
        opt_vec("--radii", "radii");
        opt_str("--grid", "grid");
        opt_num("--horizon-factor", "horizon_factor");
        opt_num("--dt-coeff", "dt_coeff");
        opt_str("--censor-policy", "censor_policy");
        opt_int("--threads", "threads");
    };

    auto* hit = app.add_subcommand("hit", "one-interval hitting estimate vs exact value");
    auto* two = app.add_subcommand("two-hit", "two-interval decay estimate vs bound shape");
    auto* dim = app.add_subcommand("dimension", "box-counting dimension fit");
    auto* nm = app.add_subcommand("near-miss", "hull-distance tail estimate");
    auto* sc = app.add_subcommand("scaling", "swallow-time scaling KS test");
    auto* tb = app.add_subcommand("tables", "CSV dump of the hitting map");
    for (auto* sub : {hit, two, dim, nm, sc, tb}) add_common(sub);

    CLI11_PARSE(app, argc, argv);

    try {
        if (hit->parsed()) return cmd_hit(fs);
        if (two->parsed()) return cmd_two_hit(fs);
        if (dim->parsed()) return cmd_dimension(fs);
        if (nm->parsed()) return cmd_near_miss(fs);
        if (sc->parsed()) return cmd_scaling(fs);
        if (tb->parsed()) return cmd_tables(fs);
    } catch (const slelab::error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
