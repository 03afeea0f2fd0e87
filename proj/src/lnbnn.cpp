#include <finid/lnbnn.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <random>
#include <unordered_set>

namespace finid {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<float> to_float(const std::vector<double>& v) {
    return std::vector<float>(v.begin(), v.end());
}

double squared_distance(const float* a, const float* b, std::size_t dim) {
    double acc = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += d * d;
    }
    return acc;
}

/// Distance with early exit once the partial sum exceeds @p bound.
double bounded_distance(const float* a, const float* b, std::size_t dim, double bound) {
    double acc = 0.0;
    std::size_t i = 0;
    while (i + 32 <= dim) {
        double lane[8] = {};
        for (std::size_t j = 0; j < 32; j += 8) {
            for (std::size_t k = 0; k < 8; ++k) {
                const double d = static_cast<double>(a[i + j + k]) - static_cast<double>(b[i + j + k]);
                lane[k] += d * d;
            }
        }
        acc += ((lane[0] + lane[1]) + (lane[2] + lane[3])) + ((lane[4] + lane[5]) + (lane[6] + lane[7]));
        i += 32;
        if (acc > bound) return acc;
    }
    for (; i < dim; ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += d * d;
    }
    return acc;
}

struct Neighbour {
    double dist;
    std::size_t row;
};

}  // namespace

/// Randomized kd-trees searched best-bin-first with a shared budget of point checks.
class KdForest {
public:
    KdForest(const SubIndex& sub, std::size_t n_trees, std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        trees_.resize(std::max<std::size_t>(n_trees, 1));
        for (auto& tree : trees_) {
            tree.order.resize(sub.size());
            std::iota(tree.order.begin(), tree.order.end(), std::uint32_t{0});
            if (!tree.order.empty()) build(sub, tree, 0, tree.order.size(), rng);
        }
    }

    std::vector<Neighbour> knn(const SubIndex& sub, const float* q, std::size_t k, std::size_t checks) const {
        using Entry = std::pair<double, std::pair<std::size_t, std::uint32_t>>;
        std::priority_queue<Entry, std::vector<Entry>, std::greater<>> frontier;
        std::vector<Neighbour> best;
        std::unordered_set<std::uint32_t> seen;
        const auto consider = [&](std::uint32_t row) {
            if (!seen.insert(row).second) return;
            const double d = squared_distance(q, sub.row(row), sub.dim);
            if (best.size() < k || d < best.back().dist) {
                const auto pos = std::upper_bound(best.begin(), best.end(), d,
                                                  [](double v, const Neighbour& n) { return v < n.dist; });
                best.insert(pos, {d, row});
                if (best.size() > k) best.pop_back();
            }
        };
        for (std::size_t t = 0; t < trees_.size(); ++t) {
            if (!trees_[t].nodes.empty()) frontier.push({0.0, {t, 0}});
        }
        while (!frontier.empty() && seen.size() < checks) {
            const auto [bound, where] = frontier.top();
            frontier.pop();
            if (best.size() == k && bound > best.back().dist) break;
            const Tree& tree = trees_[where.first];
            std::uint32_t node = where.second;
            while (tree.nodes[node].dim >= 0) {
                const Node& n = tree.nodes[node];
                const double diff = static_cast<double>(q[n.dim]) - n.split;
                const std::uint32_t near = diff < 0.0 ? n.left : n.right;
                const std::uint32_t far = diff < 0.0 ? n.right : n.left;
                frontier.push({std::max(bound, diff * diff), {where.first, far}});
                node = near;
            }
            const Node& leaf = tree.nodes[node];
            for (std::uint32_t i = leaf.begin; i < leaf.end; ++i) consider(tree.order[i]);
        }
        return best;
    }

private:
    struct Node {
        int dim = -1;
        double split = 0.0;
        std::uint32_t left = 0;
        std::uint32_t right = 0;
        std::uint32_t begin = 0;
        std::uint32_t end = 0;
    };
    struct Tree {
        std::vector<Node> nodes;
        std::vector<std::uint32_t> order;
    };

    static constexpr std::size_t kLeafSize = 8;
    static constexpr std::size_t kVarianceSample = 128;
    static constexpr std::size_t kTopDims = 5;

    std::uint32_t build(const SubIndex& sub, Tree& tree, std::size_t begin, std::size_t end, std::mt19937_64& rng) {
        const auto id = static_cast<std::uint32_t>(tree.nodes.size());
        tree.nodes.push_back({});
        tree.nodes[id].begin = static_cast<std::uint32_t>(begin);
        tree.nodes[id].end = static_cast<std::uint32_t>(end);
        if (end - begin <= kLeafSize) return id;

        const std::size_t count = std::min(kVarianceSample, end - begin);
        std::vector<double> mean(sub.dim, 0.0);
        std::vector<double> var(sub.dim, 0.0);
        for (std::size_t s = 0; s < count; ++s) {
            const float* r = sub.row(tree.order[begin + s]);
            for (std::size_t d = 0; d < sub.dim; ++d) mean[d] += r[d];
        }
        for (auto& m : mean) m /= static_cast<double>(count);
        for (std::size_t s = 0; s < count; ++s) {
            const float* r = sub.row(tree.order[begin + s]);
            for (std::size_t d = 0; d < sub.dim; ++d) var[d] += (r[d] - mean[d]) * (r[d] - mean[d]);
        }
        std::vector<std::size_t> dims(sub.dim);
        std::iota(dims.begin(), dims.end(), std::size_t{0});
        const std::size_t top = std::min(kTopDims, sub.dim);
        std::partial_sort(dims.begin(), dims.begin() + static_cast<std::ptrdiff_t>(top), dims.end(),
                          [&](std::size_t a, std::size_t b) { return var[a] > var[b] || (var[a] == var[b] && a < b); });
        const std::size_t dim = dims[std::uniform_int_distribution<std::size_t>(0, top - 1)(rng)];
        if (var[dim] <= 0.0) return id;

        const auto first = tree.order.begin() + static_cast<std::ptrdiff_t>(begin);
        const auto last = tree.order.begin() + static_cast<std::ptrdiff_t>(end);
        double split = mean[dim];
        auto mid = std::partition(first, last, [&](std::uint32_t r) { return sub.row(r)[dim] < split; });
        if (mid == first || mid == last) {
            mid = first + (last - first) / 2;
            std::nth_element(first, mid, last, [&](std::uint32_t a, std::uint32_t b) { return sub.row(a)[dim] < sub.row(b)[dim]; });
            split = sub.row(*mid)[dim];
            mid = std::partition(first, last, [&](std::uint32_t r) { return sub.row(r)[dim] < split; });
            if (mid == first || mid == last) return id;
        }
        const std::size_t cut = begin + static_cast<std::size_t>(mid - first);
        const std::uint32_t left = build(sub, tree, begin, cut, rng);
        const std::uint32_t right = build(sub, tree, cut, end, rng);
        Node& n = tree.nodes[id];
        n.dim = static_cast<int>(dim);
        n.split = split;
        n.left = left;
        n.right = right;
        return id;
    }

    std::vector<Tree> trees_;
};

IdentityIndex::IdentityIndex(EncodeParams params, IndexOptions options)
    : params_(std::move(params)), options_(options) {
    if (params_.scales.empty()) throw Error("IdentityIndex: no descriptor scales");
    subs_.resize(kDescriptorTypes * params_.scales.size());
    for (std::size_t s = 0; s < params_.scales.size(); ++s) {
        slot(DescriptorType::DogN, s).dim = params_.descriptor_len;
        slot(DescriptorType::Normal, s).dim = 2 * params_.descriptor_len;
    }
}

SubIndex& IdentityIndex::slot(DescriptorType type, std::size_t scale) {
    if (scale >= params_.scales.size()) throw Error("IdentityIndex: scale index out of range");
    return subs_[static_cast<std::size_t>(type) * params_.scales.size() + scale];
}

const SubIndex& IdentityIndex::sub_index(DescriptorType type, std::size_t scale) const {
    if (scale >= params_.scales.size()) throw Error("IdentityIndex: scale index out of range");
    return subs_[static_cast<std::size_t>(type) * params_.scales.size() + scale];
}

int IdentityIndex::class_id(const std::string& label) const {
    const auto it = std::find(classes_.begin(), classes_.end(), label);
    return it == classes_.end() ? -1 : static_cast<int>(it - classes_.begin());
}

void IdentityIndex::add_reference(const FinContour& fin, const std::string& label) {
    int cls = class_id(label);
    if (cls < 0) {
        classes_.push_back(label);
        cls = static_cast<int>(classes_.size()) - 1;
    }
    const FinEncoding enc = encode_fin(fin, EncodeRole::Reference, params_);
    const double span = static_cast<double>(params_.contour_len - 1);
    for (const auto& d : enc.descriptors) {
        ReferenceMeta meta;
        meta.class_id = cls;
        meta.fin = fin_count_;
        meta.type = d.type;
        meta.scale_index = d.scale_index;
        meta.sigma = d.sigma;
        meta.subsection = d.subsection;
        meta.start_fraction = static_cast<double>(d.subsection.start_kp) / span;
        meta.end_fraction = static_cast<double>(d.subsection.end_kp) / span;
        meta.tip_fraction = enc.subsections.tip_fraction;
        const auto values = to_float(d.values);
        restore_reference(meta, values);
    }
    ++fin_count_;
    for (auto& sub : subs_) sub.forest.reset();
}

void IdentityIndex::restore(const std::vector<std::string>& classes, std::size_t fin_count) {
    classes_ = classes;
    fin_count_ = fin_count;
}

void IdentityIndex::restore_reference(const ReferenceMeta& meta, std::span<const float> values) {
    if (meta.class_id < 0 || static_cast<std::size_t>(meta.class_id) >= classes_.size()) {
        throw Error("IdentityIndex: reference class out of range");
    }
    SubIndex& sub = slot(meta.type, meta.scale_index);
    if (values.size() != sub.dim) throw Error("IdentityIndex: descriptor dimension mismatch");
    sub.values.insert(sub.values.end(), values.begin(), values.end());
    sub.labels.push_back(meta.class_id);
    sub.reference_ids.push_back(references_.size());
    references_.push_back(meta);
}

void IdentityIndex::finalize() {
    if (options_.exact_mode) return;
    for (std::size_t i = 0; i < subs_.size(); ++i) {
        if (!subs_[i].forest && subs_[i].size() > 0) {
            subs_[i].forest = std::make_shared<const KdForest>(subs_[i], options_.trees, options_.seed + i);
        }
    }
}

IdentityIndex build_index(const std::vector<std::pair<FinContour, std::string>>& references,
                          const EncodeParams& params, const IndexOptions& options) {
    IdentityIndex index(params, options);
    for (const auto& [fin, label] : references) index.add_reference(fin, label);
    if (index.classes().size() < 2) throw Error("build_index: at least two reference classes are required");
    index.finalize();
    return index;
}

namespace {

/// Per-class nearest distances by exhaustive scan.
std::vector<Neighbour> class_minima(const SubIndex& sub, const float* q, std::size_t n_classes) {
    std::vector<Neighbour> best(n_classes, {kInf, 0});
    for (std::size_t r = 0; r < sub.size(); ++r) {
        const double d = bounded_distance(q, sub.row(r), sub.dim, best[static_cast<std::size_t>(sub.labels[r])].dist);
        auto& b = best[static_cast<std::size_t>(sub.labels[r])];
        if (d < b.dist) b = {d, r};
    }
    return best;
}

MatchRecord record_for(const SubIndex& sub, int cls, const Neighbour& own, double other) {
    MatchRecord m;
    m.class_id = cls;
    if (own.dist == kInf) {
        m.class_absent = true;
        m.delta_class = kInf;
        m.delta_other = other;
        return m;
    }
    m.delta_class = own.dist;
    m.delta_other = other;
    m.reference = sub.reference_ids[own.row];
    m.score = other == kInf ? 0.0 : std::max(other - own.dist, 0.0);
    return m;
}

/// Nearest neighbour and nearest neighbour of any other class, pruned exhaustive scan.
MatchRecord exact_nearest(const SubIndex& sub, const float* q) {
    double best = kInf;
    std::size_t best_row = 0;
    int best_cls = -1;
    double other = kInf;
    for (std::size_t r = 0; r < sub.size(); ++r) {
        const double d = bounded_distance(q, sub.row(r), sub.dim, other);
        if (d >= other) continue;
        const int k = sub.labels[r];
        if (k == best_cls) {
            if (d < best) {
                best = d;
                best_row = r;
            }
        } else if (d < best) {
            other = best;
            best = d;
            best_row = r;
            best_cls = k;
        } else {
            other = d;
        }
    }
    return record_for(sub, best_cls, {best, best_row}, other);
}

double nearest_other(const SubIndex& sub, const float* q, int cls) {
    double other = kInf;
    for (std::size_t r = 0; r < sub.size(); ++r) {
        if (sub.labels[r] == cls) continue;
        other = std::min(other, bounded_distance(q, sub.row(r), sub.dim, other));
    }
    return other;
}

MatchRecord approximate_nearest(const SubIndex& sub, const float* q, const IndexOptions& opt) {
    const auto list = sub.forest->knn(sub, q, std::max<std::size_t>(opt.knn, 2), opt.checks);
    if (list.empty()) return exact_nearest(sub, q);
    const int cls = sub.labels[list.front().row];
    double other = kInf;
    for (const auto& n : list) {
        if (sub.labels[n.row] != cls) {
            other = n.dist;
            break;
        }
    }
    if (other == kInf) other = nearest_other(sub, q, cls);
    return record_for(sub, cls, list.front(), other);
}

bool selected(DescriptorType type, FamilySelection families) {
    switch (families) {
        case FamilySelection::DogN: return type == DescriptorType::DogN;
        case FamilySelection::Normal: return type == DescriptorType::Normal;
        case FamilySelection::Both: return true;
    }
    return false;
}

}  // namespace

MatchRecord local_score(const BiometricDescriptor& d, int class_id, const IdentityIndex& index) {
    if (class_id < 0 || static_cast<std::size_t>(class_id) >= index.classes().size()) {
        throw Error("local_score: unknown class");
    }
    const SubIndex& sub = index.sub_index(d.type, d.scale_index);
    if (d.values.size() != sub.dim) throw Error("local_score: descriptor dimension mismatch");
    const auto q = to_float(d.values);
    MatchRecord m;
    if (sub.forest && !index.options().exact_mode) {
        const auto list = sub.forest->knn(sub, q.data(), std::max<std::size_t>(index.options().knn, 2),
                                          index.options().checks);
        Neighbour own{kInf, 0};
        double other = kInf;
        for (const auto& n : list) {
            if (sub.labels[n.row] == class_id) {
                if (own.dist == kInf) own = n;
            } else if (other == kInf) {
                other = n.dist;
            }
        }
        if (own.dist == kInf) own = class_minima(sub, q.data(), index.classes().size())[static_cast<std::size_t>(class_id)];
        if (other == kInf) other = nearest_other(sub, q.data(), class_id);
        m = record_for(sub, class_id, own, other);
    } else {
        const auto minima = class_minima(sub, q.data(), index.classes().size());
        double other = kInf;
        for (std::size_t c = 0; c < minima.size(); ++c) {
            if (static_cast<int>(c) != class_id) other = std::min(other, minima[c].dist);
        }
        m = record_for(sub, class_id, minima[static_cast<std::size_t>(class_id)], other);
    }
    m.type = d.type;
    m.scale_index = d.scale_index;
    return m;
}

std::vector<MatchRecord> match_descriptors(const std::vector<BiometricDescriptor>& query,
                                           const IdentityIndex& index, FamilySelection families) {
    std::vector<MatchRecord> out;
    for (std::size_t i = 0; i < query.size(); ++i) {
        const auto& d = query[i];
        if (d.degenerate || !selected(d.type, families)) continue;
        const SubIndex& sub = index.sub_index(d.type, d.scale_index);
        if (d.values.size() != sub.dim) throw Error("match_descriptors: descriptor dimension mismatch");
        if (sub.size() == 0) continue;
        const auto q = to_float(d.values);
        MatchRecord m = (sub.forest && !index.options().exact_mode) ? approximate_nearest(sub, q.data(), index.options())
                                                                     : exact_nearest(sub, q.data());
        m.query_descriptor = i;
        m.type = d.type;
        m.scale_index = d.scale_index;
        out.push_back(m);
    }
    return out;
}

double RankedResult::score_of(int class_id) const {
    for (const auto& [c, s] : ranking) {
        if (c == class_id) return s;
    }
    return 0.0;
}

RankedResult rank_classes(const std::vector<double>& totals) {
    RankedResult r;
    for (std::size_t c = 0; c < totals.size(); ++c) r.ranking.emplace_back(static_cast<int>(c), totals[c]);
    std::stable_sort(r.ranking.begin(), r.ranking.end(), [](const auto& a, const auto& b) {
        return a.second > b.second || (a.second == b.second && a.first < b.first);
    });
    return r;
}

std::vector<double> class_totals(const std::vector<MatchRecord>& matches, std::size_t n_classes,
                                 const ClassifyOptions& options) {
    std::vector<double> totals(n_classes, 0.0);
    for (const auto& m : matches) {
        if (!selected(m.type, options.families)) continue;
        if (options.only_scale && m.scale_index != *options.only_scale) continue;
        if (m.class_id < 0 || static_cast<std::size_t>(m.class_id) >= n_classes) continue;
        double w = 1.0;
        if (!options.weights.empty()) {
            if (m.scale_index >= options.weights.size()) throw Error("class_totals: missing scale weight");
            w = options.weights[m.scale_index];
        }
        totals[static_cast<std::size_t>(m.class_id)] += w * m.score;
    }
    return totals;
}

RankedResult classify_query(const FinContour& fin, const IdentityIndex& index, const ClassifyOptions& options) {
    EncodeParams params = index.params();
    const FinEncoding enc = encode_fin(fin, EncodeRole::Query, params);
    std::vector<BiometricDescriptor> query;
    for (const auto& d : enc.descriptors) {
        if (options.only_scale && d.scale_index != *options.only_scale) continue;
        query.push_back(d);
    }
    const auto matches = match_descriptors(query, index, options.families);
    RankedResult r = rank_classes(class_totals(matches, index.classes().size(), options));
    r.empty_query = matches.empty();
    return r;
}

IdentificationEvaluation evaluate_identification(const std::vector<QueryOutcome>& outcomes) {
    IdentificationEvaluation ev;
    if (outcomes.empty()) return ev;
    std::vector<double> scores;
    std::vector<char> positive;
    std::map<int, std::pair<std::vector<double>, std::vector<char>>> per;
    std::size_t correct = 0;
    for (const auto& o : outcomes) {
        if (!o.result.ranking.empty() && o.result.ranking.front().first == o.true_class &&
            o.result.ranking.front().second > 0.0) {
            ++correct;
        }
        auto& [ps, pp] = per[o.true_class];
        for (const auto& [c, s] : o.result.ranking) {
            scores.push_back(s);
            positive.push_back(c == o.true_class ? 1 : 0);
            ps.push_back(s);
            pp.push_back(c == o.true_class ? 1 : 0);
        }
    }
    ev.pooled = precision_recall(scores, positive);
    ev.ap = ev.pooled.ap;
    ev.top1 = static_cast<double>(correct) / static_cast<double>(outcomes.size());
    double sum = 0.0;
    for (const auto& [cls, data] : per) {
        const double ap = precision_recall(data.first, data.second).ap;
        ev.per_individual.emplace_back(cls, ap);
        sum += ap;
    }
    ev.map = sum / static_cast<double>(per.size());
    return ev;
}

}  // namespace finid
