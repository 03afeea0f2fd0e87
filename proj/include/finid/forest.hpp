/**
 * @file forest.hpp
 * @brief Random forest regression and classification (CART trees on
 *        bootstrap samples with per-split random feature subsets).
 */
#pragma once

#include <finid/curve.hpp>

#include <cstdint>
#include <span>
#include <vector>

namespace finid {

/// Dense row-major matrix of feature vectors.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    explicit FeatureMatrix(std::size_t cols) : cols_(cols) {}
    FeatureMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    void add_row(std::span<const double> row);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

enum class Task { Regression, Classification };

struct TrainConfig {
    std::size_t n_trees = 100;
    /// 0 means unlimited.
    std::size_t max_depth = 0;
    std::size_t min_leaf = 1;
    /// 0 selects ceil(sqrt(d)).
    std::size_t features_per_split = 0;
    std::uint64_t seed = 0;
    bool bootstrap = true;

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Defaults for quality regression: min_leaf 1.
TrainConfig regression_defaults();
/// Defaults for match classification: min_leaf 5.
TrainConfig classification_defaults();

struct TreeNode {
    /// -1 marks a leaf.
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    /// Leaf payload: {mean} for regression, class frequencies for classification.
    std::vector<double> value;

    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class DecisionTree {
public:
    DecisionTree() = default;
    explicit DecisionTree(std::vector<TreeNode> nodes);

    static DecisionTree leaf(std::vector<double> value);

    const std::vector<double>& evaluate(std::span<const double> x) const;
    const std::vector<TreeNode>& nodes() const { return nodes_; }

    friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

private:
    std::vector<TreeNode> nodes_;
};

struct Forest {
    Task task = Task::Regression;
    std::size_t n_features = 0;
    /// 1 for regression.
    std::size_t n_classes = 1;
    TrainConfig config;
    std::vector<DecisionTree> trees;

    friend bool operator==(const Forest&, const Forest&) = default;
};

Forest train_regression(const FeatureMatrix& x, std::span<const double> y, const TrainConfig& config);

/// Labels must lie in [0, n_classes).
Forest train_classifier(const FeatureMatrix& x, std::span<const int> labels, std::size_t n_classes,
                        const TrainConfig& config);

/// Mean of per-tree leaf means, optionally clamped to [0, 1].
double predict_regression(const Forest& forest, std::span<const double> x, bool clamp_unit = false);

/// Average of per-tree leaf class frequencies.
std::vector<double> predict_proba(const Forest& forest, std::span<const double> x);

}  // namespace finid
