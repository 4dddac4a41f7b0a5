#pragma once

#include <filesystem>
#include <optional>

#include <json.hpp>

#include "mfl/experiments.hpp"

namespace mfl {

/// Parsed settings for a plain training run.
struct TrainRunConfig {
    StudySetup setup;
    /// Set when the data section asks for timeseries samples.
    std::optional<TimeseriesSpec> timeseries;

    Dataset make_dataset(std::uint64_t seed) const;
};

/// Reads a JSON file; parse failures become ConfigError.
nlohmann::json load_config_file(const std::filesystem::path& path);

/// Config files have the top-level sections "model", "grid", "trainer",
/// "data" and "study", all optional. Keys override the defaults of the
/// requested run; unknown keys and ill-typed values throw ConfigError.
TrainRunConfig train_config_from_json(const nlohmann::json& root);
ChaosStudyConfig chaos_config_from_json(const nlohmann::json& root);
EulerStudyConfig euler_config_from_json(const nlohmann::json& root);
ContractionStudyConfig contraction_config_from_json(const nlohmann::json& root);
/// study.drift_free selects between the two Gibbs fixtures (default true).
GibbsCheckConfig gibbs_config_from_json(const nlohmann::json& root);
GeneralizationStudyConfig generalization_config_from_json(const nlohmann::json& root);

}  // namespace mfl
