#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "geofuse/audit.hpp"
#include "geofuse/search.hpp"
#include "geofuse/synth.hpp"
#include "geofuse/trainer.hpp"

namespace geofuse::cli {

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& message, std::size_t line = 0);
    std::size_t line;  // 0 when not tied to a file line
};

/// `key = value` lines; `#` starts a comment; keys are dotted names.
/// Duplicate keys are an error.
std::map<std::string, std::string> parse_config_text(const std::string& text,
                                                     const std::string& source = "<config>");

struct PreprocessSettings {
    bool equalize = false;
    std::size_t equalize_levels = 256;
    bool stretch = true;
    std::size_t pca_retain = 3;
    std::optional<std::size_t> d_max;
};

struct DataSettings {
    std::size_t patch_size = 4;
    std::size_t samples = 400;
};

struct SearchSettings {
    std::string algorithm = "pso";  // pso | ga | none
    std::size_t population = 10;
    std::size_t iterations = 8;
    std::string objective = "eq1";  // eq1 | eq23
    std::size_t threads = 1;
    std::size_t plateau_window = 10;
    double tolerance = 1e-9;
    /// Place the baseline assignment in the initial population.
    bool seed_baseline = true;
    SearchSpace space;
};

struct ObjectiveSettings {
    double alpha = 1.0;
    double beta = 0.0;
    double lambda = 1.0;
};

struct TimeseriesSettings {
    std::size_t steps = 30;
    std::size_t height = 32;
    std::size_t width = 32;
    double noise_sigma = 0.01;
    TransitionRule rule{TransitionKind::Annex, 0, 2, 6};
    std::size_t history = 7;
    std::size_t band = 3;
    std::size_t sequences = 240;
    std::size_t hidden = 8;
    double update_frequency = 1.0;
};

struct EvaluateSettings {
    std::size_t boundary_tolerance = 1;
};

struct ExperimentConfig {
    std::uint64_t seed = 42;
    std::filesystem::path out_dir = "geofuse_out";
    SceneSpec scene;
    PreprocessSettings preprocess;
    DataSettings data;
    SearchSettings search;
    HyperParams baseline;
    TrainOptions train;
    ObjectiveSettings objective;
    TimeseriesSettings timeseries;
    EvaluateSettings evaluate;
    AuditConfig audit;

    ExperimentConfig();

    /// Scene spec with the master-derived seed applied.
    SceneSpec scene_spec() const;
    SceneSpec timeseries_spec() const;
    std::uint64_t stage_seed(const std::string& stage) const;
};

/// Applies one `key = value` setting; throws ConfigError for unknown keys or
/// unparsable values.
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value);

/// Defaults, then the file (if any), then `overrides` ("key=value").
ExperimentConfig load_config(const std::optional<std::filesystem::path>& path,
                             const std::vector<std::string>& overrides);

/// Every key with its current value, one per line, sorted.
std::string dump_config(const ExperimentConfig& config);

}  // namespace geofuse::cli
