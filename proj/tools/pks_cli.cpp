// Command-line front end: one subcommand per experiment, CSV artifacts plus a
// manifest.json with the config echo and wall time in --out-dir.

#include "pks/config.hpp"
#include "pks/csv.hpp"
#include "pks/errors.hpp"
#include "pks/harness.hpp"
#include "pks/meanfield.hpp"
#include "pks/metrics.hpp"
#include "pks/microsim.hpp"
#include "pks/rng.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";

enum ExitCode : int { kOk = 0, kValidation = 1, kIntegration = 2 };

struct CommonArgs {
    std::string config;
    std::vector<std::string> overrides;
    std::string out_dir = "out";
    int threads = 0;
};

struct Run {
    pks::RunConfig cfg;
    fs::path out;
    json manifest;
    std::vector<std::string> outputs;

    fs::path file(const std::string& name) {
        outputs.push_back(name);
        return out / name;
    }
};

Run start(const CommonArgs& args, const std::string& subcommand) {
    Run run;
    run.cfg = pks::load_config(args.config, args.overrides);
    run.out = fs::path(args.out_dir);
    fs::create_directories(run.out);
    run.manifest["subcommand"] = subcommand;
    run.manifest["version"] = kVersion;
    run.manifest["config_file"] = args.config;
    json cfg = json::object();
    for (const auto& [key, value] : run.cfg.entries()) {
        cfg[key] = value;
    }
    run.manifest["config"] = cfg;
    run.manifest["threads"] = args.threads;
    return run;
}

void finish(Run& run, double seconds) {
    run.manifest["wall_time_s"] = seconds;
    run.manifest["outputs"] = run.outputs;
    std::ofstream(run.out / "manifest.json") << run.manifest.dump(2) << '\n';
}

pks::ParticleEnsemble draw_ensemble(const pks::RunConfig& cfg, const pks::Scenario& sc) {
    const pks::CounterRng rng(pks::stream_key(cfg.seed, sc.params.N, 0));
    return pks::sample_ensemble(sc.mu_in, sc.params.N, rng);
}

void simulate_micro(Run& run, bool dump_ensemble) {
    const pks::Scenario sc = run.cfg.scenario();
    const pks::ParticleEnsemble q_in = draw_ensemble(run.cfg, sc);
    pks::MicroOptions opts;
    opts.store_ensemble = dump_ensemble;
    const auto traj = pks::integrate_micro(sc.params, sc.init, q_in, sc.t_end, sc.solver, opts);
    const auto energy = pks::energy_micro(sc.params, traj);
    pks::csv::write_micro(run.file("micro_trajectory.csv"), traj, energy);
    if (dump_ensemble) {
        pks::csv::write_ensemble(run.file("micro_ensemble.csv"), traj);
    }
    const pks::ExplicitSolution exact =
        pks::explicit_solution(sc.params, run.cfg.r_in, run.cfg.s_in, q_in.Q.mean());
    double oracle = 0.0;
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        oracle = std::max(oracle, std::abs(traj.macro[k].r[0] - exact(traj.times[k]).r[0]));
    }
    const double res3 = *std::max_element(traj.res_ind3.begin(), traj.res_ind3.end());
    run.manifest["summary"] = {{"energy_drift", energy.relative_drift()},
                               {"max_res_ind3", res3},
                               {"oracle_deviation", oracle},
                               {"steps", traj.stats.accepted}};
    std::cout << "energy drift " << energy.relative_drift() << ", max index-3 residual " << res3
              << ", max |r - r_exact| " << oracle << '\n';
}

void simulate_moment(Run& run) {
    const pks::Scenario sc = run.cfg.scenario();
    const auto traj =
        pks::integrate_moment_ode(sc.params, sc.init.r, sc.init.s, sc.mu_in, sc.t_end, sc.solver);
    const auto energy = pks::energy_kinetic(sc.params, traj);
    pks::csv::write_kinetic(run.file("moment_trajectory.csv"), traj, energy);
    const double comm = pks::commutation_check(sc.params, traj);
    run.manifest["summary"] = {{"energy_drift", energy.relative_drift()}, {"commutation", comm}};
    std::cout << "energy drift " << energy.relative_drift() << ", commutation residual " << comm
              << '\n';
}

void simulate_pde(Run& run) {
    const pks::Scenario sc = run.cfg.scenario();
    const pks::GridDensity u_in = pks::initial_grid(sc.mu_in, run.cfg.grid);
    const auto traj = pks::integrate_pde_coupled(sc.params, sc.init.r, sc.init.s, u_in, sc.t_end,
                                                 sc.solver);
    const auto energy = pks::energy_kinetic(sc.params, traj);
    pks::csv::write_kinetic(run.file("pde_trajectory.csv"), traj, energy);
    pks::csv::write_density(run.file("pde_density.csv"), traj);
    for (const auto& w : traj.warnings) {
        std::cerr << "warning: " << w << '\n';
    }
    run.manifest["warnings"] = traj.warnings;
    run.manifest["summary"] = {{"E_total_start", energy.E_total.front()},
                               {"E_total_end", energy.E_total.back()},
                               {"initial_mass", traj.mass_in}};
    std::cout << "E_total " << energy.E_total.front() << " -> " << energy.E_total.back()
              << ", initial grid mass " << traj.mass_in << '\n';
}

void mc_study(Run& run, int threads) {
    const pks::Scenario sc = run.cfg.scenario();
    const auto study = pks::run_mc_study(sc, run.cfg.mc_N_values, run.cfg.mc_n_samples,
                                         run.cfg.seed, threads);
    pks::SlopeFit fit;
    if (study.per_n.size() >= 2) {
        fit = pks::variance_slope(study);
    }
    pks::csv::write_mc_summary(run.file("mc_summary.csv"), study, fit);
    pks::csv::write_mc_trajectories(run.file("mc_trajectories.csv"), study);
    {
        pks::csv::Writer w(run.file("mc_mean.csv"), {"N", "t", "mean", "variance", "r_kin"});
        for (const auto& e : study.per_n) {
            for (std::size_t t = 0; t < study.times.size(); ++t) {
                w.row({static_cast<double>(e.N), study.times[t], e.mean[t], e.variance[t],
                       study.r_kin[t]});
            }
        }
    }
    const auto curve = pks::mf_error_curve(study, sc.params, sc.t_end);
    json summary = {{"slope", study.per_n.size() >= 2 ? json(fit.slope) : json(nullptr)},
                    {"trend_defined", curve.trend_defined}};
    if (curve.spearman) {
        summary["spearman"] = *curve.spearman;
    }
    run.manifest["summary"] = summary;
    std::cout << "variance slope " << (study.per_n.size() >= 2 ? fit.slope : NAN) << '\n';
    for (const auto& e : study.per_n) {
        std::cout << "  N = " << e.N << ": max var " << e.max_var << ", sup mean-field error "
                  << e.sup_mf_error << '\n';
    }
}

void dobrushin(Run& run, double dr, double ds, double dmean, double dvar) {
    const pks::Scenario sc = run.cfg.scenario();
    pks::KineticInit a{sc.init.r, sc.init.s, sc.mu_in};
    pks::KineticInit b = a;
    b.r_in.array() += dr;
    b.s_in.array() += ds;
    if (auto* g = std::get_if<pks::Gaussian>(&b.mu_in)) {
        g->mean += dmean;
        g->var += dvar;
    } else {
        b.mu_in = pks::shift(b.mu_in, pks::Vector::Constant(1, dmean));
    }
    const auto times = sc.solver.sample_times(sc.t_end);
    const auto rows = pks::dobrushin_check(sc.params, a, b, times, sc.solver.tol);
    pks::csv::write_dobrushin(run.file("dobrushin.csv"), rows);
    const auto c = pks::dobrushin_constants(sc.params);
    bool all = true;
    double min_margin = INFINITY;
    for (const auto& r : rows) {
        all = all && r.satisfied;
        min_margin = std::min(min_margin, r.margin());
    }
    run.manifest["summary"] = {
        {"L", c.L}, {"C", c.C}, {"C1", c.C1}, {"C2", c.C2}, {"satisfied", all}, {"min_margin", min_margin}};
    std::cout << "L = " << c.L << ", C = " << c.C << ", estimate " << (all ? "holds" : "VIOLATED")
              << " (min margin " << min_margin << ")\n";
}

void energy(Run& run) {
    const pks::Scenario sc = run.cfg.scenario();
    const auto e = pks::energy_experiment(sc, run.cfg.grid, run.cfg.seed);
    pks::csv::write_energy(run.file("energy_micro.csv"), e.micro);
    pks::csv::write_energy(run.file("energy_moment.csv"), e.moment);
    pks::csv::write_energy(run.file("energy_pde.csv"), e.pde);
    pks::csv::write_final_density(run.file("density_final.csv"), e.final_density);
    run.manifest["warnings"] = e.warnings;
    run.manifest["summary"] = {{"micro_drift", e.micro.relative_drift()},
                               {"moment_drift", e.moment.relative_drift()},
                               {"pde_energy_gain", e.pde.E_total.back() - e.pde.E_total.front()},
                               {"pde_variance_start", e.pde_variance.front()},
                               {"pde_variance_end", e.pde_variance.back()}};
    std::cout << "micro drift " << e.micro.relative_drift() << ", moment drift "
              << e.moment.relative_drift() << ", PDE energy gain "
              << e.pde.E_total.back() - e.pde.E_total.front() << '\n';
}

void consistency(Run& run, int repeats) {
    const pks::Scenario sc = run.cfg.scenario();
    pks::csv::Writer w(run.file("consistency.csv"), {"seed", "max_deviation", "n_real_mismatch"});
    double worst = 0.0;
    for (int k = 0; k < repeats; ++k) {
        const std::uint64_t seed = run.cfg.seed + static_cast<std::uint64_t>(k);
        const auto r = pks::consistency_experiment(sc, seed);
        worst = std::max(worst, r.max_deviation);
        w.row({static_cast<double>(seed), r.max_deviation, r.n_real_mismatch ? 1.0 : 0.0});
    }
    const bool mismatch = sc.params.N_real != static_cast<double>(sc.params.N);
    run.manifest["summary"] = {{"max_deviation", worst}, {"n_real_mismatch", mismatch}};
    std::cout << "max macro deviation " << worst << (mismatch ? " (N_real != N)" : "") << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Linear partially kinetic systems: micro, mean-field and PDE simulations"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    CommonArgs common;
    auto add_common = [&common](CLI::App* sub) {
        sub->add_option("--config", common.config, "flat key = value configuration file")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--set", common.overrides, "override a config key (key=value)");
        sub->add_option("--out-dir", common.out_dir, "directory receiving all outputs");
        sub->add_option("--threads", common.threads, "worker threads (0 = OpenMP default)");
    };

    auto* micro = app.add_subcommand("simulate-micro", "integrate the N-particle ODE formulation");
    bool dump_ensemble = false;
    micro->add_flag("--dump-ensemble", dump_ensemble, "also write the wide Q_1..Q_N CSV");
    auto* moment = app.add_subcommand("simulate-moment", "integrate the closed moment ODE");
    auto* pde = app.add_subcommand("simulate-pde", "macro ODE coupled to the upwind transport PDE");
    auto* mc = app.add_subcommand("mc-study", "Monte-Carlo variance and mean-field convergence");
    auto* dob = app.add_subcommand("dobrushin", "check the stability estimate for two initial data");
    double dr = 0.1, ds = 0.0, dmean = 0.0, dvar = 0.0;
    dob->add_option("--perturb-r", dr, "offset of r_in for the second run");
    dob->add_option("--perturb-s", ds, "offset of s_in for the second run");
    dob->add_option("--perturb-mean", dmean, "offset of the initial mean for the second run");
    dob->add_option("--perturb-var", dvar, "offset of the initial variance for the second run");
    auto* en = app.add_subcommand("energy", "energies of micro, moment-ODE and PDE runs");
    auto* cons = app.add_subcommand("consistency", "micro vs moment ODE with the empirical measure");
    int repeats = 10;
    cons->add_option("--repeats", repeats, "number of consecutive seeds")->check(CLI::PositiveNumber);
    auto* check = app.add_subcommand("validate-config", "parse and validate a configuration");
    for (auto* sub : {micro, moment, pde, mc, dob, en, cons, check}) {
        add_common(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kValidation;
    }

    try {
        if (check->parsed()) {
            const auto cfg = pks::load_config(common.config, common.overrides);
            std::cout << to_config_text(cfg) << "config ok\n";
            return kOk;
        }
        const auto t0 = std::chrono::steady_clock::now();
        Run run = start(common, app.get_subcommands().front()->get_name());
        if (micro->parsed()) simulate_micro(run, dump_ensemble);
        else if (moment->parsed()) simulate_moment(run);
        else if (pde->parsed()) simulate_pde(run);
        else if (mc->parsed()) mc_study(run, common.threads);
        else if (dob->parsed()) dobrushin(run, dr, ds, dmean, dvar);
        else if (en->parsed()) energy(run);
        else if (cons->parsed()) consistency(run, repeats);
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - t0;
        finish(run, elapsed.count());
        return kOk;
    } catch (const pks::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kValidation;
    } catch (const pks::IntegrationFailure& e) {
        std::cerr << "integration failure: " << e.what() << '\n';
        return kIntegration;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return kValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidation;
    }
}
