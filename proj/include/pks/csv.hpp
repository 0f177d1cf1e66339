#pragma once

#include "pks/harness.hpp"
#include "pks/metrics.hpp"

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

namespace pks::csv {

/// Header row plus numeric rows; floats are written with 17 significant digits.
class Writer {
public:
    Writer(const std::filesystem::path& path, const std::vector<std::string>& header);

    void row(std::initializer_list<double> values);
    void row(const std::vector<double>& values);

private:
    std::ofstream out_;
    std::size_t columns_;
};

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    /// Index of a named column; throws std::out_of_range when absent.
    [[nodiscard]] std::size_t column(const std::string& name) const;
};

/// Reads a numeric CSV written by Writer. Throws std::runtime_error on ragged rows
/// or non-numeric cells.
[[nodiscard]] Table read(const std::filesystem::path& path);

inline const std::vector<std::string> kMicroHeader{"t",   "r",   "s",   "Qmean", "Qvar", "res_ind3",
                                                   "res_ind2", "T_r", "T_q", "U_r", "U_q", "E_total"};
inline const std::vector<std::string> kKineticHeader{"t",   "r",   "s",   "m1",      "m2",  "T_r",
                                                     "T_q", "U_r", "U_q", "E_total", "mass"};
inline const std::vector<std::string> kDensityHeader{"t", "q", "u"};
inline const std::vector<std::string> kDobrushinHeader{"t", "lhs", "rhs", "margin"};
inline const std::vector<std::string> kMcSummaryHeader{"N", "max_var", "sup_mf_error",
                                                       "slope_contrib"};
inline const std::vector<std::string> kMcTrajectoryHeader{"N", "sample", "t", "r"};
inline const std::vector<std::string> kEnergyHeader{"t", "T_r", "T_q", "U_r", "U_q", "E_total"};
inline const std::vector<std::string> kFinalDensityHeader{"q", "u"};

void write_micro(const std::filesystem::path& path, const MicroTrajectory& traj,
                 const EnergyReport& energy);
/// Wide ensemble dump: t, Q_1 .. Q_N (requires stored ensembles, n_q = 1).
void write_ensemble(const std::filesystem::path& path, const MicroTrajectory& traj);
void write_kinetic(const std::filesystem::path& path, const KineticTrajectory& traj,
                   const EnergyReport& energy);
/// Long format t, q, u over all stored snapshots.
void write_density(const std::filesystem::path& path, const KineticTrajectory& traj);
void write_final_density(const std::filesystem::path& path, const GridDensity& density);
void write_dobrushin(const std::filesystem::path& path, const std::vector<DobrushinRow>& rows);
void write_energy(const std::filesystem::path& path, const EnergyReport& energy);
void write_mc_summary(const std::filesystem::path& path, const McStudyResult& study,
                      const SlopeFit& fit);
void write_mc_trajectories(const std::filesystem::path& path, const McStudyResult& study);

}  // namespace pks::csv
