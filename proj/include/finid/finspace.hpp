/**
 * @file finspace.hpp
 * @brief Fin space: spatial and global-scale binning of reference
 *        descriptors, sum-pooled scoring vectors, and the reliability forest
 *        that ranks identities from them.
 */
#pragma once

#include <finid/forest.hpp>
#include <finid/lnbnn.hpp>

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace finid {

inline constexpr std::size_t kEdgePartitions = 5;
inline constexpr std::size_t kPartitions = 2 * kEdgePartitions;
inline constexpr std::size_t kSpatialBins = kPartitions * (kPartitions + 1) / 2;
inline constexpr std::size_t kScaleBins = 5;
inline constexpr std::size_t kFinSpaceDim = kDescriptorTypes * kSpatialBins * kScaleBins;

/// Ten partitions in contour arc-length fractions, five per edge, split at the tip.
struct EdgePartitioning {
    std::array<double, kPartitions + 1> bounds{};

    static EdgePartitioning from_tip(double tip_fraction);
};

/// Contiguous 1-based partition interval [first, last].
struct PartitionInterval {
    int first = 1;
    int last = 1;

    friend bool operator==(const PartitionInterval&, const PartitionInterval&) = default;
};

/// Partitions covered by more than half of their length; nullopt when none are.
std::optional<PartitionInterval> occupied_interval(double start_fraction, double end_fraction,
                                                   const EdgePartitioning& part);

/// (i-1)*10 - (i-1)(i-2)/2 + (j-i) for the interval [i, j].
std::size_t spatial_index(PartitionInterval interval);
PartitionInterval spatial_interval(std::size_t index);

std::optional<std::size_t> assign_spatial_bin(const Subsection& sub, std::size_t contour_len,
                                              const EdgePartitioning& part);

/// sigma_j * p / l_n.
double sigma_global(double sigma_j, double l_n, double p);

struct FinSpaceConfig {
    /// kScaleBins + 1 increasing edges; bin b covers (edges[b], edges[b+1]].
    std::vector<double> scale_edges;
    /// Descriptor length used as l_n.
    double descriptor_len = 256.0;

    friend bool operator==(const FinSpaceConfig&, const FinSpaceConfig&) = default;
};

/// Log-spaced edges over [sigma_min * p_min / l_n, sigma_max / l_n], p_min = 1 / (contour_len - 1).
FinSpaceConfig default_finspace_config(const EncodeParams& params);

/// Values outside the edges are clamped to the first or last bin.
std::size_t scale_bin(double sigma_g, const FinSpaceConfig& config);

struct FinSpaceCoordinate {
    DescriptorType type = DescriptorType::DogN;
    std::size_t spatial_bin = 0;
    std::size_t scale_bin = 0;

    std::size_t flat() const;
    friend bool operator==(const FinSpaceCoordinate&, const FinSpaceCoordinate&) = default;
};

FinSpaceCoordinate coordinate_from_flat(std::size_t flat);

/// Fin-space coordinates of every reference descriptor of an index.
class FinSpace {
public:
    FinSpace(const IdentityIndex& index, FinSpaceConfig config);

    const FinSpaceConfig& config() const { return config_; }
    const std::optional<FinSpaceCoordinate>& coordinate(std::size_t reference_id) const;

private:
    FinSpaceConfig config_;
    std::vector<std::optional<FinSpaceCoordinate>> coords_;
};

struct ScoringVector {
    std::vector<double> values = std::vector<double>(kFinSpaceDim, 0.0);
    std::size_t query = 0;
    int class_id = -1;
    bool class_absent = false;

    double sum() const;
};

/// One scoring vector per class, pooled from the query's match records.
std::vector<ScoringVector> build_scoring_vectors(const std::vector<MatchRecord>& matches, const IdentityIndex& index,
                                                 const FinSpace& space);

ScoringVector build_scoring_vector(const FinContour& query, int class_id, const IdentityIndex& index,
                                   const FinSpace& space);

/// P(same) per class; ties broken by @p baseline totals, then class id.
RankedResult rank_from_vectors(const std::vector<ScoringVector>& vectors, const std::vector<double>& baseline,
                               const Forest& model);

/// Encodes, matches with both families and ranks classes by the model.
RankedResult rank_identities(const FinContour& query, const IdentityIndex& index, const FinSpace& space,
                             const Forest& model);

struct LabelledFin {
    FinContour fin;
    std::string label;
    bool reference = false;
};

struct ReliabilityConfig {
    TrainConfig forest = classification_defaults();
    std::size_t negatives_per_query = 5;
    std::uint64_t seed = 0;
};

/// Individuals (labels) split into two folds.
std::array<std::vector<std::string>, 2> split_individuals(std::vector<std::string> labels, std::uint64_t seed);

struct FoldResult {
    std::vector<std::string> individuals;
    /// Held-out outcomes of this fold's queries against this fold's gallery.
    std::vector<QueryOutcome> model;
    std::vector<QueryOutcome> dogn;
    std::vector<QueryOutcome> normal;
    /// Held-out scoring vectors with their same-class label, for per-bin statistics.
    std::vector<ScoringVector> vectors;
    std::vector<char> positive;
};

struct ReliabilityTraining {
    /// Forest trained on the samples of both folds.
    Forest model;
    FinSpaceConfig finspace;
    std::array<FoldResult, 2> folds;
    IdentificationEvaluation model_eval;
    IdentificationEvaluation dogn_eval;
    IdentificationEvaluation normal_eval;
};

/**
 * @brief Two-fold, individual-level cross-validated reliability training.
 *
 * Each fold builds a gallery from its own references. Training samples are
 * each query's true class plus at most negatives_per_query random other
 * classes. Each fold's forest is evaluated on the other fold.
 */
ReliabilityTraining train_reliability_model(const std::vector<LabelledFin>& dataset, const EncodeParams& params,
                                            const IndexOptions& index_options, const ReliabilityConfig& config);

/// AP of each fin-space bin used alone as the score.
std::vector<double> per_bin_ap(const std::vector<ScoringVector>& vectors, const std::vector<char>& positive);

}  // namespace finid
