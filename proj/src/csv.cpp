#include "pks/csv.hpp"

#include <charconv>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace pks::csv {

Writer::Writer(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(path), columns_(header.size()) {
    if (!out_) {
        throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    }
    out_ << std::setprecision(17);
    for (std::size_t i = 0; i < header.size(); ++i) {
        out_ << (i ? "," : "") << header[i];
    }
    out_ << '\n';
}

void Writer::row(std::initializer_list<double> values) {
    row(std::vector<double>(values));
}

void Writer::row(const std::vector<double>& values) {
    if (values.size() != columns_) {
        throw std::logic_error("csv row width does not match header");
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) {
            out_ << ',';
        }
        out_ << values[i];
    }
    out_ << '\n';
}

std::size_t Table::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) {
            return i;
        }
    }
    throw std::out_of_range("no column named '" + name + "'");
}

Table read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open '" + path.string() + "'");
    }
    Table t;
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error("'" + path.string() + "' is empty");
    }
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            t.header.push_back(cell);
        }
    }
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            double v = 0.0;
            const char* end = cell.data() + cell.size();
            const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
            if (ec != std::errc() || ptr != end || cell.empty()) {
                throw std::runtime_error("non-numeric cell '" + cell + "' in " + path.string());
            }
            row.push_back(v);
        }
        if (row.size() != t.header.size()) {
            throw std::runtime_error("ragged row in " + path.string());
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

void write_micro(const std::filesystem::path& path, const MicroTrajectory& traj,
                 const EnergyReport& energy) {
    Writer w(path, kMicroHeader);
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        const double mean = traj.q_mean[k][0];
        const double var = traj.q_second[k](0, 0) - mean * mean;
        w.row({traj.times[k], traj.macro[k].r[0], traj.macro[k].s[0], mean, var, traj.res_ind3[k],
               traj.res_ind2[k], energy.T_r[k], energy.T_q[k], energy.U_r[k], energy.U_q[k],
               energy.E_total[k]});
    }
}

void write_ensemble(const std::filesystem::path& path, const MicroTrajectory& traj) {
    if (traj.ensemble.size() != traj.times.size()) {
        throw std::invalid_argument("write_ensemble needs stored ensembles");
    }
    std::vector<std::string> header{"t"};
    const std::size_t n = traj.q_in.size();
    for (std::size_t j = 1; j <= n; ++j) {
        header.push_back("Q_" + std::to_string(j));
    }
    Writer w(path, header);
    std::vector<double> row(n + 1);
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        row[0] = traj.times[k];
        for (std::size_t j = 0; j < n; ++j) {
            row[j + 1] = traj.ensemble[k].Q(0, static_cast<Eigen::Index>(j));
        }
        w.row(row);
    }
}

void write_kinetic(const std::filesystem::path& path, const KineticTrajectory& traj,
                   const EnergyReport& energy) {
    Writer w(path, kKineticHeader);
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        w.row({traj.times[k], traj.macro[k].r[0], traj.macro[k].s[0], traj.first_moment[k][0],
               traj.second_moment[k](0, 0), energy.T_r[k], energy.T_q[k], energy.U_r[k],
               energy.U_q[k], energy.E_total[k], traj.mass[k]});
    }
}

void write_density(const std::filesystem::path& path, const KineticTrajectory& traj) {
    Writer w(path, kDensityHeader);
    for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
        const GridDensity& g = traj.snapshots[k];
        for (std::size_t i = 0; i < g.n_pts(); ++i) {
            w.row({traj.times[k], g.node(i), g.values[static_cast<Eigen::Index>(i)]});
        }
    }
}

void write_final_density(const std::filesystem::path& path, const GridDensity& density) {
    Writer w(path, kFinalDensityHeader);
    for (std::size_t i = 0; i < density.n_pts(); ++i) {
        w.row({density.node(i), density.values[static_cast<Eigen::Index>(i)]});
    }
}

void write_dobrushin(const std::filesystem::path& path, const std::vector<DobrushinRow>& rows) {
    Writer w(path, kDobrushinHeader);
    for (const auto& r : rows) {
        w.row({r.t, r.lhs, r.rhs, r.margin()});
    }
}

void write_energy(const std::filesystem::path& path, const EnergyReport& energy) {
    Writer w(path, kEnergyHeader);
    for (std::size_t k = 0; k < energy.times.size(); ++k) {
        w.row({energy.times[k], energy.T_r[k], energy.T_q[k], energy.U_r[k], energy.U_q[k],
               energy.E_total[k]});
    }
}

void write_mc_summary(const std::filesystem::path& path, const McStudyResult& study,
                      const SlopeFit& fit) {
    Writer w(path, kMcSummaryHeader);
    for (std::size_t i = 0; i < study.per_n.size(); ++i) {
        const auto& e = study.per_n[i];
        const double contrib = i < fit.contributions.size()
                                   ? fit.contributions[i]
                                   : std::numeric_limits<double>::quiet_NaN();
        w.row({static_cast<double>(e.N), e.max_var, e.sup_mf_error, contrib});
    }
}

void write_mc_trajectories(const std::filesystem::path& path, const McStudyResult& study) {
    Writer w(path, kMcTrajectoryHeader);
    for (const auto& e : study.per_n) {
        for (std::size_t k = 0; k < e.r.size(); ++k) {
            for (std::size_t t = 0; t < study.times.size(); ++t) {
                w.row({static_cast<double>(e.N), static_cast<double>(k), study.times[t], e.r[k][t]});
            }
        }
    }
}

}  // namespace pks::csv
