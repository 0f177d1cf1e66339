#include "pks/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace pks {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(value, &used);
    } catch (const std::exception&) {
        throw ConfigError(key, "expected a number, got '" + value + "'");
    }
    if (used != value.size()) {
        throw ConfigError(key, "expected a number, got '" + value + "'");
    }
    return out;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& value) {
    std::uint64_t out = 0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end) {
        throw ConfigError(key, "expected a non-negative integer, got '" + value + "'");
    }
    return out;
}

std::vector<std::size_t> parse_list(const std::string& key, const std::string& value) {
    std::vector<std::size_t> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(parse_unsigned(key, trim(item)));
    }
    return out;
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

}  // namespace

ModelParams RunConfig::params() const {
    return scalar_params(M_r, M_q_total / N_real, gamma_r, gamma_q_total / N_real, G_r, N_real, N);
}

Measure1D RunConfig::initial_measure() const {
    if (mu_kind == "dirac") {
        return EmpiricalMeasure::dirac(mu_mean);
    }
    return Gaussian{mu_mean, mu_var};
}

SolverOptions RunConfig::solver() const {
    SolverOptions s;
    s.tol = tol;
    s.max_step = max_step > 0.0 ? max_step : std::numeric_limits<double>::infinity();
    s.n_out = n_out;
    return s;
}

Scenario RunConfig::scenario() const {
    Scenario sc;
    sc.params = params();
    sc.init = MacroState{Vector::Constant(1, r_in), Vector::Constant(1, s_in)};
    sc.mu_in = initial_measure();
    sc.t_end = t_end;
    sc.solver = solver();
    return sc;
}

std::vector<std::pair<std::string, std::string>> RunConfig::entries() const {
    std::string list;
    for (std::size_t i = 0; i < mc_N_values.size(); ++i) {
        list += (i ? "," : "") + std::to_string(mc_N_values[i]);
    }
    return {
        {"M_r", fmt(M_r)},
        {"M_q_total", fmt(M_q_total)},
        {"gamma_r", fmt(gamma_r)},
        {"gamma_q_total", fmt(gamma_q_total)},
        {"G_r", fmt(G_r)},
        {"N_real", fmt(N_real)},
        {"N", std::to_string(N)},
        {"r_in", fmt(r_in)},
        {"s_in", fmt(s_in)},
        {"mu_in.kind", mu_kind},
        {"mu_in.mean", fmt(mu_mean)},
        {"mu_in.var", fmt(mu_var)},
        {"t_end", fmt(t_end)},
        {"seed", std::to_string(seed)},
        {"solver.tol", fmt(tol)},
        {"solver.max_step", fmt(max_step)},
        {"solver.n_out", std::to_string(n_out)},
        {"grid.lo", fmt(grid.lo)},
        {"grid.hi", fmt(grid.hi)},
        {"grid.n_pts", std::to_string(grid.n_pts)},
        {"mc.N_values", list},
        {"mc.n_samples", std::to_string(mc_n_samples)},
    };
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& [key, value] : RunConfig{}.entries()) {
            k.push_back(key);
        }
        return k;
    }();
    return keys;
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "M_r") cfg.M_r = parse_double(key, value);
    else if (key == "M_q_total") cfg.M_q_total = parse_double(key, value);
    else if (key == "gamma_r") cfg.gamma_r = parse_double(key, value);
    else if (key == "gamma_q_total") cfg.gamma_q_total = parse_double(key, value);
    else if (key == "G_r") cfg.G_r = parse_double(key, value);
    else if (key == "N_real") cfg.N_real = parse_double(key, value);
    else if (key == "N") cfg.N = parse_unsigned(key, value);
    else if (key == "r_in") cfg.r_in = parse_double(key, value);
    else if (key == "s_in") cfg.s_in = parse_double(key, value);
    else if (key == "mu_in.kind") cfg.mu_kind = value;
    else if (key == "mu_in.mean") cfg.mu_mean = parse_double(key, value);
    else if (key == "mu_in.var") cfg.mu_var = parse_double(key, value);
    else if (key == "t_end") cfg.t_end = parse_double(key, value);
    else if (key == "seed") cfg.seed = parse_unsigned(key, value);
    else if (key == "solver.tol") cfg.tol = parse_double(key, value);
    else if (key == "solver.max_step") cfg.max_step = parse_double(key, value);
    else if (key == "solver.n_out") cfg.n_out = parse_unsigned(key, value);
    else if (key == "grid.lo") cfg.grid.lo = parse_double(key, value);
    else if (key == "grid.hi") cfg.grid.hi = parse_double(key, value);
    else if (key == "grid.n_pts") cfg.grid.n_pts = parse_unsigned(key, value);
    else if (key == "mc.N_values") cfg.mc_N_values = parse_list(key, value);
    else if (key == "mc.n_samples") cfg.mc_n_samples = parse_unsigned(key, value);
    else throw ConfigError(key, "unknown key");
}

void validate_config(const RunConfig& cfg) {
    auto positive = [](const char* key, double v) {
        if (!std::isfinite(v) || !(v > 0.0)) {
            throw ConfigError(key, "must be a positive number");
        }
    };
    auto finite = [](const char* key, double v) {
        if (!std::isfinite(v)) {
            throw ConfigError(key, "must be finite");
        }
    };
    positive("M_r", cfg.M_r);
    positive("M_q_total", cfg.M_q_total);
    finite("gamma_r", cfg.gamma_r);
    finite("gamma_q_total", cfg.gamma_q_total);
    finite("G_r", cfg.G_r);
    positive("N_real", cfg.N_real);
    if (cfg.N < 1) {
        throw ConfigError("N", "must be at least 1");
    }
    finite("r_in", cfg.r_in);
    finite("s_in", cfg.s_in);
    finite("mu_in.mean", cfg.mu_mean);
    if (cfg.mu_kind == "gaussian") {
        positive("mu_in.var", cfg.mu_var);
    } else if (cfg.mu_kind == "dirac") {
        if (cfg.mu_var != 0.0) {
            throw ConfigError("mu_in.var", "must be 0 for a dirac initial measure");
        }
    } else {
        throw ConfigError("mu_in.kind", "must be 'gaussian' or 'dirac'");
    }
    if (!std::isfinite(cfg.t_end) || cfg.t_end < 0.0) {
        throw ConfigError("t_end", "must be a non-negative number");
    }
    positive("solver.tol", cfg.tol);
    if (!std::isfinite(cfg.max_step) || cfg.max_step < 0.0) {
        throw ConfigError("solver.max_step", "must be >= 0 (0 = unlimited)");
    }
    if (cfg.n_out < 1) {
        throw ConfigError("solver.n_out", "must be at least 1");
    }
    finite("grid.lo", cfg.grid.lo);
    finite("grid.hi", cfg.grid.hi);
    if (!(cfg.grid.hi > cfg.grid.lo)) {
        throw ConfigError("grid.hi", "must exceed grid.lo");
    }
    if (cfg.grid.n_pts < 3) {
        throw ConfigError("grid.n_pts", "must be at least 3");
    }
    if (cfg.mc_N_values.empty()) {
        throw ConfigError("mc.N_values", "must list at least one particle count");
    }
    for (std::size_t n : cfg.mc_N_values) {
        if (n < 1) {
            throw ConfigError("mc.N_values", "particle counts must be >= 1");
        }
    }
    if (cfg.mc_n_samples < 2) {
        throw ConfigError("mc.n_samples", "must be at least 2");
    }
    try {
        cfg.params().validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("model", e.what());
    }
}

RunConfig parse_config(std::istream& in, const std::vector<std::string>& overrides) {
    RunConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line_no), "expected 'key = value'");
        }
        apply_setting(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(o, "override must look like key=value");
        }
        apply_setting(cfg, trim(o.substr(0, eq)), trim(o.substr(eq + 1)));
    }
    validate_config(cfg);
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("config", "cannot open '" + path.string() + "'");
    }
    return parse_config(in, overrides);
}

std::string to_config_text(const RunConfig& cfg) {
    std::ostringstream os;
    for (const auto& [key, value] : cfg.entries()) {
        os << key << " = " << value << '\n';
    }
    return os.str();
}

}  // namespace pks
