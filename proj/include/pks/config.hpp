#pragma once

#include "pks/harness.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pks {

/// A configuration value failed validation; field() names the offending key.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string field, const std::string& message)
        : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}

    [[nodiscard]] const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Flat run configuration. Particle quantities are given as totals over the
/// realistic population (M_q_total = N_real * M_q), as in the benchmark table.
struct RunConfig {
    double M_r = 20.0;
    double M_q_total = 10.0;
    double gamma_r = 1.0;
    double gamma_q_total = 1.0;
    double G_r = -1.0;
    double N_real = 250.0;
    std::size_t N = 250;
    double r_in = 1.0;
    double s_in = 0.0;
    std::string mu_kind = "gaussian";  // gaussian | dirac
    double mu_mean = -2.0;
    double mu_var = 1.0;
    double t_end = 60.0;
    std::uint64_t seed = 20240601;

    double tol = 1e-8;
    double max_step = 0.0;  // 0 = unlimited
    std::size_t n_out = 601;

    GridSpec grid;

    std::vector<std::size_t> mc_N_values{4, 8, 16, 32, 64, 128, 256, 512, 1024, 2048};
    std::size_t mc_n_samples = 100;

    [[nodiscard]] ModelParams params() const;
    [[nodiscard]] Measure1D initial_measure() const;
    [[nodiscard]] SolverOptions solver() const;
    [[nodiscard]] Scenario scenario() const;

    /// Every key with its current value, in file order.
    [[nodiscard]] std::vector<std::pair<std::string, std::string>> entries() const;
};

/// Names of all accepted keys.
[[nodiscard]] const std::vector<std::string>& config_keys();

/// Sets one key; throws ConfigError for unknown keys or unparsable values.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

/// Re-checks every invariant (positivity, grid shape, model validity).
void validate_config(const RunConfig& cfg);

/// Parses "key = value" lines; '#' starts a comment. Overrides are "key=value"
/// strings applied after the file. The result is validated.
[[nodiscard]] RunConfig parse_config(std::istream& in, const std::vector<std::string>& overrides = {});
[[nodiscard]] RunConfig load_config(const std::filesystem::path& path,
                                    const std::vector<std::string>& overrides = {});

[[nodiscard]] std::string to_config_text(const RunConfig& cfg);

}  // namespace pks
