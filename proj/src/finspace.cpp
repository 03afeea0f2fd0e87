#include <finid/finspace.hpp>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>

namespace finid {

EdgePartitioning EdgePartitioning::from_tip(double tip_fraction) {
    if (!(tip_fraction > 0.0 && tip_fraction < 1.0)) throw Error("EdgePartitioning: tip must lie strictly inside the contour");
    EdgePartitioning part;
    const double n = static_cast<double>(kEdgePartitions);
    for (std::size_t k = 0; k < kEdgePartitions; ++k) {
        part.bounds[k] = tip_fraction * static_cast<double>(k) / n;
        part.bounds[kEdgePartitions + k] = tip_fraction + (1.0 - tip_fraction) * static_cast<double>(k) / n;
    }
    part.bounds[kPartitions] = 1.0;
    return part;
}

std::optional<PartitionInterval> occupied_interval(double start_fraction, double end_fraction,
                                                   const EdgePartitioning& part) {
    const double lo = std::min(start_fraction, end_fraction);
    const double hi = std::max(start_fraction, end_fraction);
    int first = 0;
    int last = 0;
    for (std::size_t k = 0; k < kPartitions; ++k) {
        const double a = part.bounds[k];
        const double b = part.bounds[k + 1];
        const double covered = std::max(0.0, std::min(hi, b) - std::max(lo, a));
        if (covered > 0.5 * (b - a)) {
            const int id = static_cast<int>(k) + 1;
            if (first == 0) first = id;
            assert(last == 0 || last == id - 1);
            last = id;
        }
    }
    if (first == 0) return std::nullopt;
    return PartitionInterval{first, last};
}

std::size_t spatial_index(PartitionInterval interval) {
    const int i = interval.first;
    const int j = interval.last;
    const int n = static_cast<int>(kPartitions);
    if (i < 1 || j < i || j > n) throw Error("spatial_index: invalid partition interval");
    return static_cast<std::size_t>((i - 1) * n - (i - 1) * (i - 2) / 2 + (j - i));
}

PartitionInterval spatial_interval(std::size_t index) {
    if (index >= kSpatialBins) throw Error("spatial_interval: index out of range");
    const int n = static_cast<int>(kPartitions);
    int rest = static_cast<int>(index);
    for (int i = 1; i <= n; ++i) {
        const int row = n - i + 1;
        if (rest < row) return {i, i + rest};
        rest -= row;
    }
    throw Error("spatial_interval: index out of range");
}

std::optional<std::size_t> assign_spatial_bin(const Subsection& sub, std::size_t contour_len,
                                              const EdgePartitioning& part) {
    if (contour_len < 2 || sub.end_kp >= contour_len) throw Error("assign_spatial_bin: subsection outside contour");
    const double span = static_cast<double>(contour_len - 1);
    const auto interval = occupied_interval(static_cast<double>(sub.start_kp) / span,
                                            static_cast<double>(sub.end_kp) / span, part);
    if (!interval) return std::nullopt;
    return spatial_index(*interval);
}

double sigma_global(double sigma_j, double l_n, double p) {
    return sigma_j / l_n * p;
}

FinSpaceConfig default_finspace_config(const EncodeParams& params) {
    if (params.scales.empty() || params.contour_len < 2) throw Error("default_finspace_config: invalid encoding parameters");
    const auto [min_it, max_it] = std::minmax_element(params.scales.begin(), params.scales.end());
    FinSpaceConfig cfg;
    cfg.descriptor_len = static_cast<double>(params.descriptor_len);
    const double p_min = 1.0 / static_cast<double>(params.contour_len - 1);
    const double lo = std::log(*min_it * p_min / cfg.descriptor_len);
    const double hi = std::log(*max_it / cfg.descriptor_len);
    for (std::size_t b = 0; b <= kScaleBins; ++b) {
        cfg.scale_edges.push_back(std::exp(lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(kScaleBins)));
    }
    return cfg;
}

std::size_t scale_bin(double sigma_g, const FinSpaceConfig& config) {
    if (config.scale_edges.size() != kScaleBins + 1) throw Error("scale_bin: expected six scale-bin edges");
    for (std::size_t b = 0; b < kScaleBins; ++b) {
        if (sigma_g <= config.scale_edges[b + 1]) return b;
    }
    return kScaleBins - 1;
}

std::size_t FinSpaceCoordinate::flat() const {
    return static_cast<std::size_t>(type) * kSpatialBins * kScaleBins + spatial_bin * kScaleBins + scale_bin;
}

FinSpaceCoordinate coordinate_from_flat(std::size_t flat) {
    if (flat >= kFinSpaceDim) throw Error("coordinate_from_flat: index out of range");
    FinSpaceCoordinate c;
    c.type = static_cast<DescriptorType>(flat / (kSpatialBins * kScaleBins));
    c.spatial_bin = (flat / kScaleBins) % kSpatialBins;
    c.scale_bin = flat % kScaleBins;
    return c;
}

FinSpace::FinSpace(const IdentityIndex& index, FinSpaceConfig config) : config_(std::move(config)) {
    if (config_.scale_edges.size() != kScaleBins + 1) throw Error("FinSpace: expected six scale-bin edges");
    coords_.reserve(index.references().size());
    for (const auto& ref : index.references()) {
        const auto part = EdgePartitioning::from_tip(ref.tip_fraction);
        const auto interval = occupied_interval(ref.start_fraction, ref.end_fraction, part);
        if (!interval) {
            coords_.emplace_back();
            continue;
        }
        FinSpaceCoordinate c;
        c.type = ref.type;
        c.spatial_bin = spatial_index(*interval);
        c.scale_bin = scale_bin(sigma_global(ref.sigma, config_.descriptor_len, ref.subsection.p), config_);
        coords_.push_back(c);
    }
}

const std::optional<FinSpaceCoordinate>& FinSpace::coordinate(std::size_t reference_id) const {
    if (reference_id >= coords_.size()) throw Error("FinSpace: reference id out of range");
    return coords_[reference_id];
}

double ScoringVector::sum() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
}

std::vector<ScoringVector> build_scoring_vectors(const std::vector<MatchRecord>& matches, const IdentityIndex& index,
                                                 const FinSpace& space) {
    const std::size_t n = index.classes().size();
    std::vector<ScoringVector> out(n);
    std::vector<char> present(n, 0);
    for (const auto& ref : index.references()) present[static_cast<std::size_t>(ref.class_id)] = 1;
    for (std::size_t c = 0; c < n; ++c) {
        out[c].class_id = static_cast<int>(c);
        out[c].class_absent = present[c] == 0;
    }
    for (const auto& m : matches) {
        if (m.class_id < 0 || m.score <= 0.0) continue;
        const auto& coord = space.coordinate(m.reference);
        if (!coord) continue;
        out[static_cast<std::size_t>(m.class_id)].values[coord->flat()] += m.score;
    }
    return out;
}

ScoringVector build_scoring_vector(const FinContour& query, int class_id, const IdentityIndex& index,
                                   const FinSpace& space) {
    if (class_id < 0 || static_cast<std::size_t>(class_id) >= index.classes().size()) {
        ScoringVector v;
        v.class_id = class_id;
        v.class_absent = true;
        return v;
    }
    const FinEncoding enc = encode_fin(query, EncodeRole::Query, index.params());
    const auto matches = match_descriptors(enc.descriptors, index, FamilySelection::Both);
    return build_scoring_vectors(matches, index, space)[static_cast<std::size_t>(class_id)];
}

RankedResult rank_from_vectors(const std::vector<ScoringVector>& vectors, const std::vector<double>& baseline,
                               const Forest& model) {
    if (baseline.size() != vectors.size()) throw Error("rank_from_vectors: baseline size mismatch");
    struct Row {
        int cls;
        double p;
        double base;
    };
    std::vector<Row> rows;
    for (std::size_t c = 0; c < vectors.size(); ++c) {
        const auto proba = predict_proba(model, vectors[c].values);
        rows.push_back({static_cast<int>(c), proba.size() > 1 ? proba[1] : 0.0, baseline[c]});
    }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        if (a.p != b.p) return a.p > b.p;
        if (a.base != b.base) return a.base > b.base;
        return a.cls < b.cls;
    });
    RankedResult r;
    for (const auto& row : rows) r.ranking.emplace_back(row.cls, row.p);
    return r;
}

RankedResult rank_identities(const FinContour& query, const IdentityIndex& index, const FinSpace& space,
                             const Forest& model) {
    const FinEncoding enc = encode_fin(query, EncodeRole::Query, index.params());
    const auto matches = match_descriptors(enc.descriptors, index, FamilySelection::Both);
    ClassifyOptions both;
    both.families = FamilySelection::Both;
    RankedResult r = rank_from_vectors(build_scoring_vectors(matches, index, space),
                                       class_totals(matches, index.classes().size(), both), model);
    r.empty_query = matches.empty();
    return r;
}

namespace {

std::size_t draw(std::mt19937_64& rng, std::size_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v = rng();
    while (v >= limit) v = rng();
    return static_cast<std::size_t>(v % n);
}

template <typename T>
void shuffle_with(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[draw(rng, i)]);
}

struct FoldSamples {
    FeatureMatrix x{kFinSpaceDim};
    std::vector<int> y;
};

}  // namespace

std::array<std::vector<std::string>, 2> split_individuals(std::vector<std::string> labels, std::uint64_t seed) {
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    std::mt19937_64 rng(seed);
    shuffle_with(labels, rng);
    std::array<std::vector<std::string>, 2> folds;
    const std::size_t half = (labels.size() + 1) / 2;
    for (std::size_t i = 0; i < labels.size(); ++i) folds[i < half ? 0 : 1].push_back(labels[i]);
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

ReliabilityTraining train_reliability_model(const std::vector<LabelledFin>& dataset, const EncodeParams& params,
                                            const IndexOptions& index_options, const ReliabilityConfig& config) {
    std::vector<std::string> labels;
    for (const auto& f : dataset) labels.push_back(f.label);
    const auto folds = split_individuals(labels, config.seed);
    if (folds[0].size() + folds[1].size() < 4) throw Error("train_reliability_model: at least four individuals are required");
    for (const auto& f : folds) {
        if (f.size() < 2) throw Error("train_reliability_model: fold with fewer than two classes");
    }

    ReliabilityTraining out;
    out.finspace = default_finspace_config(params);
    std::array<FoldSamples, 2> samples;
    std::array<std::vector<std::vector<double>>, 2> baselines;
    std::mt19937_64 rng(config.seed ^ 0x5bd1e995ULL);

    for (std::size_t f = 0; f < 2; ++f) {
        const std::set<std::string> members(folds[f].begin(), folds[f].end());
        std::vector<std::pair<FinContour, std::string>> refs;
        for (const auto& d : dataset) {
            if (d.reference && members.count(d.label)) refs.emplace_back(d.fin, d.label);
        }
        const IdentityIndex index = build_index(refs, params, index_options);
        for (const auto& name : folds[f]) {
            if (index.class_id(name) < 0) throw Error("train_reliability_model: individual without reference: " + name);
        }
        const FinSpace space(index, out.finspace);
        FoldResult& fold = out.folds[f];
        fold.individuals = folds[f];
        const std::size_t n_classes = index.classes().size();

        std::size_t query_id = 0;
        for (const auto& d : dataset) {
            if (d.reference || !members.count(d.label)) continue;
            const int truth = index.class_id(d.label);
            const FinEncoding enc = encode_fin(d.fin, EncodeRole::Query, params);
            const auto matches = match_descriptors(enc.descriptors, index, FamilySelection::Both);
            auto vectors = build_scoring_vectors(matches, index, space);

            ClassifyOptions opt;
            opt.families = FamilySelection::DogN;
            fold.dogn.push_back({rank_classes(class_totals(matches, n_classes, opt)), truth});
            opt.families = FamilySelection::Normal;
            fold.normal.push_back({rank_classes(class_totals(matches, n_classes, opt)), truth});
            opt.families = FamilySelection::Both;
            baselines[f].push_back(class_totals(matches, n_classes, opt));

            std::vector<int> negatives;
            for (std::size_t c = 0; c < n_classes; ++c) {
                if (static_cast<int>(c) != truth) negatives.push_back(static_cast<int>(c));
            }
            shuffle_with(negatives, rng);
            if (negatives.size() > config.negatives_per_query) negatives.resize(config.negatives_per_query);
            samples[f].x.add_row(vectors[static_cast<std::size_t>(truth)].values);
            samples[f].y.push_back(1);
            for (int c : negatives) {
                samples[f].x.add_row(vectors[static_cast<std::size_t>(c)].values);
                samples[f].y.push_back(0);
            }
            for (auto& v : vectors) {
                v.query = query_id;
                fold.positive.push_back(v.class_id == truth ? 1 : 0);
                fold.vectors.push_back(std::move(v));
            }
            ++query_id;
        }
    }

    for (std::size_t f = 0; f < 2; ++f) {
        const std::size_t held = 1 - f;
        TrainConfig cfg = config.forest;
        cfg.seed = config.forest.seed + f + 1;
        const Forest forest = train_classifier(samples[f].x, samples[f].y, 2, cfg);
        FoldResult& fold = out.folds[held];
        const std::size_t n_classes = fold.individuals.size();
        for (std::size_t q = 0; q < baselines[held].size(); ++q) {
            const std::vector<ScoringVector> vectors(fold.vectors.begin() + static_cast<std::ptrdiff_t>(q * n_classes),
                                                     fold.vectors.begin() + static_cast<std::ptrdiff_t>((q + 1) * n_classes));
            fold.model.push_back({rank_from_vectors(vectors, baselines[held][q], forest), fold.dogn[q].true_class});
        }
    }

    FeatureMatrix all(kFinSpaceDim);
    std::vector<int> all_y;
    for (const auto& s : samples) {
        for (std::size_t r = 0; r < s.x.rows(); ++r) all.add_row(s.x.row(r));
        all_y.insert(all_y.end(), s.y.begin(), s.y.end());
    }
    out.model = train_classifier(all, all_y, 2, config.forest);

    std::vector<QueryOutcome> model;
    std::vector<QueryOutcome> dogn;
    std::vector<QueryOutcome> normal;
    for (const auto& fold : out.folds) {
        model.insert(model.end(), fold.model.begin(), fold.model.end());
        dogn.insert(dogn.end(), fold.dogn.begin(), fold.dogn.end());
        normal.insert(normal.end(), fold.normal.begin(), fold.normal.end());
    }
    if (model.empty()) throw Error("train_reliability_model: no queries");
    out.model_eval = evaluate_identification(model);
    out.dogn_eval = evaluate_identification(dogn);
    out.normal_eval = evaluate_identification(normal);
    return out;
}

std::vector<double> per_bin_ap(const std::vector<ScoringVector>& vectors, const std::vector<char>& positive) {
    if (vectors.size() != positive.size()) throw Error("per_bin_ap: size mismatch");
    std::vector<double> out(kFinSpaceDim, 0.0);
    std::vector<double> scores(vectors.size());
    for (std::size_t b = 0; b < kFinSpaceDim; ++b) {
        for (std::size_t i = 0; i < vectors.size(); ++i) scores[i] = vectors[i].values[b];
        out[b] = precision_recall(scores, positive).ap;
    }
    return out;
}

}  // namespace finid
