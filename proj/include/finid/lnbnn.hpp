/**
 * @file lnbnn.hpp
 * @brief Local naive Bayes nearest neighbour identification: a labelled
 *        descriptor index per (descriptor type, scale), the local match
 *        score, single- and multi-scale class ranking, and AP/mAP.
 */
#pragma once

#include <finid/encode.hpp>
#include <finid/metrics.hpp>

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace finid {

/// Where a reference descriptor came from.
struct ReferenceMeta {
    int class_id = 0;
    std::size_t fin = 0;
    DescriptorType type = DescriptorType::DogN;
    std::size_t scale_index = 0;
    double sigma = 1.0;
    Subsection subsection;
    /// Arc-length extent on the fin as fractions, start_fraction < end_fraction.
    double start_fraction = 0.0;
    double end_fraction = 1.0;
    double tip_fraction = 0.5;

    friend bool operator==(const ReferenceMeta&, const ReferenceMeta&) = default;
};

class KdForest;

/// Descriptors of one (type, scale) pair.
struct SubIndex {
    std::size_t dim = 0;
    /// Row-major, one row per descriptor.
    std::vector<float> values;
    std::vector<int> labels;
    /// Position of each row in IdentityIndex::references().
    std::vector<std::size_t> reference_ids;
    std::shared_ptr<const KdForest> forest;

    std::size_t size() const { return labels.size(); }
    const float* row(std::size_t i) const { return values.data() + i * dim; }
};

struct IndexOptions {
    /// Exhaustive search; approximate mode uses randomized kd-trees.
    bool exact_mode = true;
    std::size_t trees = 4;
    std::size_t checks = 512;
    std::size_t knn = 8;
    std::uint64_t seed = 0;

    friend bool operator==(const IndexOptions&, const IndexOptions&) = default;
};

class IdentityIndex {
public:
    IdentityIndex(EncodeParams params, IndexOptions options);

    /// Encodes @p fin in the reference role and stores its non-degenerate descriptors.
    void add_reference(const FinContour& fin, const std::string& label);
    /// Builds the approximate-search structures; no-op in exact mode.
    void finalize();

    const EncodeParams& params() const { return params_; }
    const IndexOptions& options() const { return options_; }
    const std::vector<std::string>& classes() const { return classes_; }
    /// -1 when the label is unknown.
    int class_id(const std::string& label) const;
    std::size_t fin_count() const { return fin_count_; }

    const SubIndex& sub_index(DescriptorType type, std::size_t scale) const;
    std::size_t scale_count() const { return params_.scales.size(); }
    const std::vector<ReferenceMeta>& references() const { return references_; }

    /// Used by deserialization: appends a stored reference descriptor verbatim.
    void restore(const std::vector<std::string>& classes, std::size_t fin_count);
    void restore_reference(const ReferenceMeta& meta, std::span<const float> values);

private:
    SubIndex& slot(DescriptorType type, std::size_t scale);

    EncodeParams params_;
    IndexOptions options_;
    std::vector<std::string> classes_;
    std::size_t fin_count_ = 0;
    std::vector<SubIndex> subs_;
    std::vector<ReferenceMeta> references_;
};

/// Builds and finalizes an index over labelled reference fins; needs at least two classes.
IdentityIndex build_index(const std::vector<std::pair<FinContour, std::string>>& references,
                          const EncodeParams& params = {}, const IndexOptions& options = {});

enum class FamilySelection { DogN, Normal, Both };

struct MatchRecord {
    std::size_t query_descriptor = 0;
    DescriptorType type = DescriptorType::DogN;
    std::size_t scale_index = 0;
    int class_id = -1;
    /// Squared distances to the nearest descriptor of the class and of any other class.
    double delta_class = 0.0;
    double delta_other = 0.0;
    /// max(delta_other - delta_class, 0).
    double score = 0.0;
    /// Reference id of the nearest descriptor of the class.
    std::size_t reference = 0;
    bool class_absent = false;
};

/// Local score of a single descriptor against class @p class_id.
MatchRecord local_score(const BiometricDescriptor& d, int class_id, const IdentityIndex& index);

/**
 * @brief Per query descriptor, the record of the class owning its nearest
 *        neighbour; every other class scores zero for that descriptor.
 */
std::vector<MatchRecord> match_descriptors(const std::vector<BiometricDescriptor>& query,
                                           const IdentityIndex& index,
                                           FamilySelection families = FamilySelection::Both);

struct ClassifyOptions {
    FamilySelection families = FamilySelection::DogN;
    /// One weight per scale; empty means all ones.
    std::vector<double> weights;
    /// Restrict to a single scale index (single-scale classification).
    std::optional<std::size_t> only_scale;
};

struct RankedResult {
    /// (class id, score), descending score, ties by class id.
    std::vector<std::pair<int, double>> ranking;
    bool empty_query = false;

    double score_of(int class_id) const;
};

/// Sorts per-class totals into a ranking.
RankedResult rank_classes(const std::vector<double>& totals);

/// Weighted per-class sums of match scores.
std::vector<double> class_totals(const std::vector<MatchRecord>& matches, std::size_t n_classes,
                                 const ClassifyOptions& options = {});

RankedResult classify_query(const FinContour& fin, const IdentityIndex& index, const ClassifyOptions& options = {});

struct QueryOutcome {
    RankedResult result;
    int true_class = -1;
};

struct IdentificationEvaluation {
    double ap = 0.0;
    double map = 0.0;
    double top1 = 0.0;
    PrCurve pooled;
    /// (class id, AP over that individual's queries).
    std::vector<std::pair<int, double>> per_individual;
};

/**
 * @brief AP over all pooled (query, class) scores and mAP over individuals.
 *
 * The per-individual AP pools the (query, class) pairs of that individual's
 * queries only.
 */
IdentificationEvaluation evaluate_identification(const std::vector<QueryOutcome>& outcomes);

}  // namespace finid
