#pragma once

#include "anderson/chaos_quadrature.hpp"
#include "anderson/model_params.hpp"
#include "anderson/monte_carlo.hpp"
#include "anderson/spectral_noise.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace anderson {

inline constexpr const char* kVersion = "0.3.1";

// Exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string command;
    Equation equation = Equation::Heat;

    // target parameter theta*: alpha (regular) or H (rough)
    bool rough = false;
    double theta_star = 0.5;
    int dim = 1;
    TemporalKernel temporal;

    // theta_n: explicit values, or theta* + sign * scale * 2^{-j}, j = j_start..j_end
    std::vector<double> sequence;
    double dyadic_sign = 1.0;
    double dyadic_scale = 1.0;
    int j_start = 1;
    int j_end = 6;

    std::vector<double> t_grid{1.0};
    std::vector<double> x_grid{0.0};

    int m = 2;
    std::size_t seeds = 1000;
    std::uint64_t seed_base = 0;
    std::optional<Lattice> lattice;

    QuadratureConfig quad;
    std::vector<int> orders{1};
    double gap_tolerance = 0.05;
    bool converge_quadrature = true;

    std::vector<double> bound_values;
    double bound_halfwidth = 0.05;
    int bound_m_max = 10;

    Direction direction = Direction::Time;
    double p = 2.0;
    std::optional<double> beta;
    std::optional<double> delta;
    std::vector<double> holder_thetas;
    double transect_start = 0.5;
    double transect_step = 0.0625;
    int transect_count = 9;
    double transect_fixed = 0.0;  // x for time transects, t for space transects
    double slope_tolerance = 0.1;

    // section.key -> value as written, for the manifest and the hash
    std::map<std::string, std::string> echo;

    NoiseParam param(double theta) const;
    NoiseParam target() const { return param(theta_star); }
    std::vector<NoiseParam> theta_sequence() const;
    std::vector<SpaceTimePoint> grid_points() const;
    Lattice lattice_for(double t_horizon) const;
};

// Parses and validates; throws ConfigError.
RunConfig parse_config(const std::string& text, const std::string& command);
RunConfig load_config(const std::filesystem::path& path, const std::string& command);

struct RunOptions {
    std::filesystem::path out_dir = ".";
    int threads = 0;
    std::uint64_t seed_offset = 0;
};

struct CsvTable {
    std::string name;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

std::string render_csv(const CsvTable& t, const std::string& comment);

struct CommandResult {
    std::vector<CsvTable> tables;
    // flat summary for the manifest
    std::map<std::string, std::string> summary;
};

// Exit code 3; carries whatever rows were completed.
struct NumericalFailure : std::runtime_error {
    CommandResult partial;
    NumericalFailure(const std::string& what, CommandResult r) : std::runtime_error(what), partial(std::move(r)) {}
};

struct KSReport {
    NoiseParam theta_n;
    double statistic = 0.0;
    std::size_t sample_size = 0;
};

// Sup distance between the empirical CDFs.
double ks_two_sample(std::vector<double> a, std::vector<double> b);

// Ordinary least squares slope of log(estimate) on log(lag); NaN when
// fewer than two positive estimates.
double loglog_slope(const std::vector<IncrementStat>& stats);

std::vector<std::uint64_t> seed_list(const RunConfig& c, const RunOptions& o);

CommandResult cmd_bounds(const RunConfig& c, const RunOptions& o);
CommandResult cmd_gap(const RunConfig& c, const RunOptions& o);
CommandResult cmd_converge(const RunConfig& c, const RunOptions& o, std::vector<KSReport>* reports = nullptr);
CommandResult cmd_holder(const RunConfig& c, const RunOptions& o);
CommandResult cmd_simulate(const RunConfig& c, const RunOptions& o);

std::string config_hash(const RunConfig& c, const RunOptions& o);

// Entry point of the command-line tool; returns the exit code.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace anderson
