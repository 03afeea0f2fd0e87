#include <finid/forest.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

namespace finid {

void FeatureMatrix::add_row(std::span<const double> row) {
    if (rows_ == 0 && cols_ == 0) cols_ = row.size();
    if (row.size() != cols_) throw Error("FeatureMatrix: row dimensionality mismatch");
    data_.insert(data_.end(), row.begin(), row.end());
    ++rows_;
}

TrainConfig regression_defaults() {
    TrainConfig c;
    c.min_leaf = 1;
    return c;
}

TrainConfig classification_defaults() {
    TrainConfig c;
    c.min_leaf = 5;
    return c;
}

DecisionTree::DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.empty()) throw Error("DecisionTree: no nodes");
    for (const auto& n : nodes_) {
        if (n.feature >= 0) {
            const auto count = static_cast<int>(nodes_.size());
            if (n.left <= 0 || n.right <= 0 || n.left >= count || n.right >= count) {
                throw Error("DecisionTree: child index out of range");
            }
        } else if (n.value.empty()) {
            throw Error("DecisionTree: leaf without value");
        }
    }
}

DecisionTree DecisionTree::leaf(std::vector<double> value) {
    TreeNode node;
    node.value = std::move(value);
    return DecisionTree({std::move(node)});
}

const std::vector<double>& DecisionTree::evaluate(std::span<const double> x) const {
    std::size_t at = 0;
    while (nodes_[at].feature >= 0) {
        const auto& n = nodes_[at];
        at = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes_[at].value;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Uniform integer in [0, n) by rejection; independent of the standard
// library's distribution implementation.
std::size_t draw_below(std::mt19937_64& rng, std::size_t n) {
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t v;
    do {
        v = rng();
    } while (v >= limit);
    return static_cast<std::size_t>(v % bound);
}

struct Split {
    bool found = false;
    double cost = 0.0;
    std::size_t feature = 0;
    double threshold = 0.0;
};

class TreeBuilder {
public:
    TreeBuilder(const FeatureMatrix& x, std::span<const double> targets, Task task, std::size_t n_classes,
                const TrainConfig& config, std::uint64_t seed)
        : x_(x), y_(targets), task_(task), n_classes_(n_classes), config_(config), rng_(seed) {
        const std::size_t d = x_.cols();
        mtry_ = config_.features_per_split == 0
                    ? static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))))
                    : std::min(config_.features_per_split, d);
        mtry_ = std::max<std::size_t>(mtry_, 1);
    }

    DecisionTree build() {
        std::vector<std::size_t> sample(x_.rows());
        if (config_.bootstrap) {
            for (auto& s : sample) s = draw_below(rng_, x_.rows());
            std::sort(sample.begin(), sample.end());
        } else {
            std::iota(sample.begin(), sample.end(), std::size_t{0});
        }

        struct Pending {
            int node;
            std::vector<std::size_t> rows;
            std::size_t depth;
        };
        std::vector<TreeNode> nodes(1);
        std::vector<Pending> stack;
        stack.push_back({0, std::move(sample), 0});
        while (!stack.empty()) {
            Pending job = std::move(stack.back());
            stack.pop_back();
            const auto idx = static_cast<std::size_t>(job.node);
            Split split;
            const bool depth_ok = config_.max_depth == 0 || job.depth < config_.max_depth;
            if (depth_ok && job.rows.size() >= 2 * config_.min_leaf && !pure(job.rows)) {
                split = best_split(job.rows);
            }
            if (!split.found) {
                nodes[idx].value = leaf_value(job.rows);
                continue;
            }
            std::vector<std::size_t> left;
            std::vector<std::size_t> right;
            for (std::size_t r : job.rows) {
                (x_(r, split.feature) <= split.threshold ? left : right).push_back(r);
            }
            const int left_id = static_cast<int>(nodes.size());
            nodes.emplace_back();
            const int right_id = static_cast<int>(nodes.size());
            nodes.emplace_back();
            nodes[idx].feature = static_cast<int>(split.feature);
            nodes[idx].threshold = split.threshold;
            nodes[idx].left = left_id;
            nodes[idx].right = right_id;
            stack.push_back({right_id, std::move(right), job.depth + 1});
            stack.push_back({left_id, std::move(left), job.depth + 1});
        }
        return DecisionTree(std::move(nodes));
    }

private:
    bool pure(const std::vector<std::size_t>& rows) const {
        const double first = y_[rows.front()];
        return std::all_of(rows.begin(), rows.end(), [&](std::size_t r) { return y_[r] == first; });
    }

    std::vector<double> leaf_value(const std::vector<std::size_t>& rows) const {
        if (task_ == Task::Regression) {
            double sum = 0.0;
            for (std::size_t r : rows) sum += y_[r];
            return {sum / static_cast<double>(rows.size())};
        }
        std::vector<double> freq(n_classes_, 0.0);
        for (std::size_t r : rows) freq[static_cast<std::size_t>(y_[r])] += 1.0;
        for (auto& f : freq) f /= static_cast<double>(rows.size());
        return freq;
    }

    // Visits features in random order until mtry non-constant features were
    // evaluated; the winner is the lowest cost, then lowest feature index,
    // then lowest threshold.
    Split best_split(const std::vector<std::size_t>& rows) {
        const std::size_t d = x_.cols();
        std::vector<std::size_t> order(d);
        std::iota(order.begin(), order.end(), std::size_t{0});
        Split best;
        std::size_t evaluated = 0;
        std::vector<std::pair<double, std::size_t>> column(rows.size());
        for (std::size_t k = 0; k < d && evaluated < mtry_; ++k) {
            const std::size_t pick = k + draw_below(rng_, d - k);
            std::swap(order[k], order[pick]);
            const std::size_t f = order[k];
            for (std::size_t i = 0; i < rows.size(); ++i) column[i] = {x_(rows[i], f), rows[i]};
            std::sort(column.begin(), column.end());
            if (column.front().first == column.back().first) continue;
            ++evaluated;
            scan_feature(f, column, best);
        }
        return best;
    }

    void consider(Split& best, double cost, std::size_t feature, double threshold) const {
        if (!best.found || cost < best.cost ||
            (cost == best.cost && (feature < best.feature || (feature == best.feature && threshold < best.threshold)))) {
            best = {true, cost, feature, threshold};
        }
    }

    static double midpoint(double a, double b) {
        const double mid = a + (b - a) / 2.0;
        return mid < b ? mid : a;
    }

    void scan_feature(std::size_t f, const std::vector<std::pair<double, std::size_t>>& column, Split& best) const {
        const std::size_t n = column.size();
        const std::size_t min_leaf = config_.min_leaf;
        if (task_ == Task::Regression) {
            double total = 0.0;
            double total_sq = 0.0;
            for (const auto& [v, r] : column) {
                total += y_[r];
                total_sq += y_[r] * y_[r];
            }
            double left = 0.0;
            double left_sq = 0.0;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                const double t = y_[column[i].second];
                left += t;
                left_sq += t * t;
                if (column[i].first == column[i + 1].first) continue;
                const std::size_t nl = i + 1;
                const std::size_t nr = n - nl;
                if (nl < min_leaf || nr < min_leaf) continue;
                const double right = total - left;
                const double right_sq = total_sq - left_sq;
                const double sse = (left_sq - left * left / static_cast<double>(nl)) +
                                   (right_sq - right * right / static_cast<double>(nr));
                consider(best, std::max(sse, 0.0), f, midpoint(column[i].first, column[i + 1].first));
            }
            return;
        }
        std::vector<double> total(n_classes_, 0.0);
        for (const auto& [v, r] : column) total[static_cast<std::size_t>(y_[r])] += 1.0;
        std::vector<double> left(n_classes_, 0.0);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            left[static_cast<std::size_t>(y_[column[i].second])] += 1.0;
            if (column[i].first == column[i + 1].first) continue;
            const std::size_t nl = i + 1;
            const std::size_t nr = n - nl;
            if (nl < min_leaf || nr < min_leaf) continue;
            double sum_l = 0.0;
            double sum_r = 0.0;
            for (std::size_t c = 0; c < n_classes_; ++c) {
                sum_l += left[c] * left[c];
                const double rc = total[c] - left[c];
                sum_r += rc * rc;
            }
            // Weighted Gini: nl * (1 - sum pl^2) + nr * (1 - sum pr^2).
            const double gini = static_cast<double>(nl) - sum_l / static_cast<double>(nl) +
                                static_cast<double>(nr) - sum_r / static_cast<double>(nr);
            consider(best, gini, f, midpoint(column[i].first, column[i + 1].first));
        }
    }

    const FeatureMatrix& x_;
    std::span<const double> y_;
    Task task_;
    std::size_t n_classes_;
    TrainConfig config_;
    std::mt19937_64 rng_;
    std::size_t mtry_ = 1;
};

Forest train(const FeatureMatrix& x, std::span<const double> targets, Task task, std::size_t n_classes,
             const TrainConfig& config) {
    if (x.rows() < 2 || x.rows() != targets.size()) {
        throw Error("train: need at least 2 rows and one target per row");
    }
    if (x.cols() == 0) throw Error("train: zero-dimensional features");
    if (config.n_trees < 1 || config.min_leaf < 1) throw Error("train: n_trees and min_leaf must be >= 1");

    Forest forest;
    forest.task = task;
    forest.n_features = x.cols();
    forest.n_classes = n_classes;
    forest.config = config;
    forest.trees.resize(config.n_trees);

    const auto grow = [&](std::size_t t) {
        const std::uint64_t seed = splitmix64(config.seed ^ splitmix64(static_cast<std::uint64_t>(t) + 1));
        forest.trees[t] = TreeBuilder(x, targets, task, n_classes, config, seed).build();
    };
    const std::size_t workers = std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), config.n_trees);
    if (workers <= 1) {
        for (std::size_t t = 0; t < config.n_trees; ++t) grow(t);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t t = w; t < config.n_trees; t += workers) grow(t);
            });
        }
        for (auto& th : pool) th.join();
    }
    return forest;
}

}  // namespace

Forest train_regression(const FeatureMatrix& x, std::span<const double> y, const TrainConfig& config) {
    return train(x, y, Task::Regression, 1, config);
}

Forest train_classifier(const FeatureMatrix& x, std::span<const int> labels, std::size_t n_classes,
                        const TrainConfig& config) {
    if (n_classes < 1) throw Error("train_classifier: need at least one class");
    std::vector<double> targets(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= n_classes) {
            throw Error("train_classifier: label out of range");
        }
        targets[i] = static_cast<double>(labels[i]);
    }
    return train(x, targets, Task::Classification, n_classes, config);
}

double predict_regression(const Forest& forest, std::span<const double> x, bool clamp_unit) {
    if (forest.task != Task::Regression) throw Error("predict_regression: forest is a classifier");
    if (x.size() != forest.n_features) throw Error("predict_regression: feature dimensionality mismatch");
    double sum = 0.0;
    for (const auto& tree : forest.trees) sum += tree.evaluate(x).front();
    const double mean = sum / static_cast<double>(forest.trees.size());
    return clamp_unit ? std::clamp(mean, 0.0, 1.0) : mean;
}

std::vector<double> predict_proba(const Forest& forest, std::span<const double> x) {
    if (forest.task != Task::Classification) throw Error("predict_proba: forest is a regressor");
    if (x.size() != forest.n_features) throw Error("predict_proba: feature dimensionality mismatch");
    std::vector<double> proba(forest.n_classes, 0.0);
    for (const auto& tree : forest.trees) {
        const auto& leaf = tree.evaluate(x);
        for (std::size_t c = 0; c < proba.size(); ++c) proba[c] += leaf[c];
    }
    for (auto& p : proba) p /= static_cast<double>(forest.trees.size());
    return proba;
}

}  // namespace finid
