#pragma once

#include "subharnack/model.hpp"
#include "subharnack/segment.hpp"
#include "subharnack/solver.hpp"
#include "subharnack/subordinator.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace subharnack::cli {

/// Bad or incomplete experiment config. The message names the field.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    ModelDescriptor model;
    BernsteinSpec subordinator;
    Segment xi = Segment::constant(0.0, 0, {0.0});
    Segment eta = Segment::constant(0.0, 0, {0.0});
    double T = 1.0;
    std::vector<double> p{2.0};
    std::vector<double> epsilons{0.05};
    SolverConfig solver;
    std::size_t n_outer = 200;
    std::size_t n_inner = 500;
    std::size_t n_couplings = 1000;
    std::size_t n_moment = 20000;
    std::size_t n_bins = 40;
    std::uint64_t seed = 0;
    std::filesystem::path out_dir = "out";
    std::vector<std::string> payoffs{"one_plus_square"};
    std::vector<double> scaling_horizons{0.25, 0.5, 1.0, 2.0, 4.0};
    /// FNV-1a of the config text.
    std::uint64_t config_hash = 0;
};

std::uint64_t fnv1a(std::string_view bytes) noexcept;

/// Parses TOML text; relative CSV paths resolve against base_dir. A seed
/// must be present unless seed_override is given.
ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir,
                              std::optional<std::uint64_t> seed_override = std::nullopt);
ExperimentConfig load_config(const std::filesystem::path& path,
                             std::optional<std::uint64_t> seed_override = std::nullopt);

/// Each command writes CSV + summary.json into config.out_dir and returns the
/// process exit code.
int cmd_simulate(const ExperimentConfig& config, std::ostream& log);
int cmd_couple(const ExperimentConfig& config, std::ostream& log);
/// which: any of "log", "power", "tv", "scaling". Exit 0 iff every report
/// passes or is vacuous.
int cmd_verify(const ExperimentConfig& config, const std::vector<std::string>& which, std::ostream& log);

/// Full command-line entry point.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace subharnack::cli
