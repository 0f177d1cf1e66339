// Re-parses everything written by cli_end_to_end.cmake and checks schemas,
// manifests, the Dobrushin margin, energy drift and thread-count determinism.

#include "pks/csv.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int failures = 0;

void expect(bool ok, const std::string& what) {
    std::cout << (ok ? "ok   " : "FAIL ") << what << '\n';
    if (!ok) {
        ++failures;
    }
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

pks::csv::Table table(const fs::path& p, const std::vector<std::string>& header) {
    pks::csv::Table t = pks::csv::read(p);
    expect(t.header == header, p.filename().string() + " header");
    expect(!t.rows.empty(), p.filename().string() + " has rows");
    return t;
}

// The directory holds exactly manifest.json plus the outputs the manifest lists.
void check_manifest(const fs::path& dir, const std::string& subcommand) {
    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    expect(manifest.at("subcommand") == subcommand, subcommand + " manifest subcommand");
    expect(manifest.at("wall_time_s").get<double>() >= 0.0, subcommand + " manifest wall time");
    expect(manifest.at("config").contains("M_r"), subcommand + " manifest config echo");
    std::set<std::string> listed{"manifest.json"};
    for (const auto& name : manifest.at("outputs")) {
        listed.insert(name.get<std::string>());
    }
    std::set<std::string> present;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        present.insert(fs::relative(entry.path(), dir).string());
    }
    expect(listed == present, subcommand + " writes only its listed files");
}

double max_abs(const pks::csv::Table& t, const std::string& col) {
    const std::size_t c = t.column(col);
    double m = 0.0;
    for (const auto& row : t.rows) {
        m = std::max(m, std::abs(row[c]));
    }
    return m;
}

double relative_drift(const pks::csv::Table& t) {
    const std::size_t c = t.column("E_total");
    const double e0 = t.rows.front()[c];
    double d = 0.0;
    for (const auto& row : t.rows) {
        d = std::max(d, std::abs(row[c] - e0) / std::abs(e0));
    }
    return d;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: cli_check_outputs <out-root>\n";
        return 1;
    }
    const fs::path root(argv[1]);

    const auto micro = table(root / "simulate-micro/micro_trajectory.csv", pks::csv::kMicroHeader);
    expect(relative_drift(micro) <= 1e-6, "simulate-micro energy drift <= 1e-6");
    expect(max_abs(micro, "res_ind3") <= 1e-6, "simulate-micro index-3 residual <= 1e-6");
    {
        const auto wide = pks::csv::read(root / "simulate-micro/micro_ensemble.csv");
        expect(wide.header.size() == 251 && wide.header.front() == "t", "ensemble dump is wide");
        expect(wide.rows.size() == micro.rows.size(), "ensemble dump aligned with trajectory");
    }
    check_manifest(root / "simulate-micro", "simulate-micro");

    const auto moment =
        table(root / "simulate-moment/moment_trajectory.csv", pks::csv::kKineticHeader);
    expect(relative_drift(moment) <= 1e-6, "simulate-moment energy drift <= 1e-6");
    check_manifest(root / "simulate-moment", "simulate-moment");

    const auto pde = table(root / "simulate-pde/pde_trajectory.csv", pks::csv::kKineticHeader);
    const std::size_t e = pde.column("E_total");
    expect(pde.rows.back()[e] > pde.rows.front()[e], "simulate-pde energy rises");
    table(root / "simulate-pde/pde_density.csv", pks::csv::kDensityHeader);
    check_manifest(root / "simulate-pde", "simulate-pde");

    const auto dob = table(root / "dobrushin/dobrushin.csv", pks::csv::kDobrushinHeader);
    const std::size_t margin = dob.column("margin");
    expect(std::all_of(dob.rows.begin(), dob.rows.end(),
                       [margin](const auto& row) { return row[margin] >= 0.0; }),
           "dobrushin margin >= 0 on every row");
    check_manifest(root / "dobrushin", "dobrushin");

    for (const std::string name : {"energy_micro.csv", "energy_moment.csv", "energy_pde.csv"}) {
        table(root / "energy" / name, pks::csv::kEnergyHeader);
    }
    table(root / "energy/density_final.csv", pks::csv::kFinalDensityHeader);
    check_manifest(root / "energy", "energy");

    const auto cons = table(root / "consistency/consistency.csv",
                            {"seed", "max_deviation", "n_real_mismatch"});
    expect(max_abs(cons, "max_deviation") <= 1e-7, "consistency deviation <= 1e-7");
    check_manifest(root / "consistency", "consistency");

    const auto summary = table(root / "mc-study/mc_summary.csv", pks::csv::kMcSummaryHeader);
    expect(summary.rows.size() == 3, "mc summary has one row per N");
    const auto trajectories =
        table(root / "mc-study/mc_trajectories.csv", pks::csv::kMcTrajectoryHeader);
    expect(trajectories.rows.size() == 3 * 6 * 601, "mc trajectories in long format");
    check_manifest(root / "mc-study", "mc-study");
    for (const std::string name : {"mc_summary.csv", "mc_trajectories.csv", "mc_mean.csv"}) {
        expect(slurp(root / "mc-study" / name) == slurp(root / "mc-study-threads" / name),
               name + " identical for 1 and 4 threads");
    }

    std::cout << (failures == 0 ? "all output checks passed" : "output checks failed") << '\n';
    return failures == 0 ? 0 : 1;
}
