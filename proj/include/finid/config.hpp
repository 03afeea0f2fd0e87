/**
 * @file config.hpp
 * @brief Flat run configuration with one key per tunable.
 */
#pragma once

#include <finid/finspace.hpp>
#include <finid/forest.hpp>
#include <finid/lnbnn.hpp>
#include <finid/stroke.hpp>
#include <finid/synth.hpp>

#include <cstdint>
#include <string>

namespace finid {

struct RunConfig {
    DetectionParams detect;
    TrainConfig quality_forest = regression_defaults();
    std::size_t detect_volume_grid = 20;

    EncodeParams encode;
    IndexOptions index;
    FamilySelection families = FamilySelection::DogN;
    std::vector<double> scale_weights;

    TrainConfig reliability_forest = classification_defaults();
    std::size_t negatives_per_query = 5;
    std::uint64_t fold_seed = 0;
    /// Empty means the log-spaced default edges.
    std::vector<double> scale_bin_edges;

    std::size_t synth_individuals = 25;
    std::size_t synth_per_individual = 6;
    std::uint64_t synth_seed = 7;
    PopulationParams population;
    PerturbationRange perturbation;
};

/// Reads a flat JSON object; unknown keys and wrongly typed values are errors.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
std::string dump_config(const RunConfig& config);

FinSpaceConfig finspace_config(const RunConfig& config);
ClassifyOptions classify_options(const RunConfig& config);

/// FNV-1a over the canonical form of the encoding and index settings.
std::uint64_t index_config_hash(const EncodeParams& params, const IndexOptions& options);

}  // namespace finid
