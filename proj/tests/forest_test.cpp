#include <finid/forest.hpp>

#include <doctest.h>

#include <random>

using namespace finid;

TEST_CASE("a hand-built tree routes by threshold") {
    const DecisionTree tree({{0, 0.5, 1, 2, {}}, {-1, 0.0, -1, -1, {1.0}}, {-1, 0.0, -1, -1, {7.0}}});
    const double lo[] = {0.2};
    const double hi[] = {0.9};
    CHECK(tree.evaluate(lo)[0] == 1.0);
    CHECK(tree.evaluate(hi)[0] == 7.0);
    CHECK_THROWS_AS(DecisionTree({{0, 0.5, 1, 9, {}}}), Error);
}

TEST_CASE("classifier forest learns XOR") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    FeatureMatrix x(2);
    std::vector<int> y;
    for (int i = 0; i < 400; ++i) {
        const double row[] = {u(rng), u(rng)};
        x.add_row(row);
        y.push_back((row[0] > 0.5) != (row[1] > 0.5) ? 1 : 0);
    }
    TrainConfig cfg = classification_defaults();
    cfg.n_trees = 30;
    cfg.features_per_split = 2;
    const Forest f = train_classifier(x, y, 2, cfg);
    int correct = 0;
    for (int i = 0; i < 200; ++i) {
        const double row[] = {u(rng), u(rng)};
        const auto p = predict_proba(f, row);
        REQUIRE(p.size() == 2);
        CHECK(p[0] + p[1] == doctest::Approx(1.0));
        correct += ((p[1] > 0.5) == ((row[0] > 0.5) != (row[1] > 0.5))) ? 1 : 0;
    }
    CHECK(correct >= 190);
}

TEST_CASE("unbootstrapped full-depth regression memorises its training set") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    FeatureMatrix x(3);
    std::vector<double> y;
    for (int i = 0; i < 150; ++i) {
        const double row[] = {u(rng), u(rng), u(rng)};
        x.add_row(row);
        y.push_back(u(rng));
    }
    TrainConfig cfg = regression_defaults();
    cfg.n_trees = 5;
    cfg.bootstrap = false;
    cfg.features_per_split = 3;
    const Forest f = train_regression(x, y, cfg);
    for (std::size_t i = 0; i < x.rows(); ++i) CHECK(predict_regression(f, x.row(i)) == doctest::Approx(y[i]).epsilon(1e-12));
}

TEST_CASE("forest training is a function of the seed") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    FeatureMatrix x(4);
    std::vector<double> y;
    for (int i = 0; i < 100; ++i) {
        const double row[] = {u(rng), u(rng), u(rng), u(rng)};
        x.add_row(row);
        y.push_back(row[0] + row[1] * row[2]);
    }
    TrainConfig cfg = regression_defaults();
    cfg.n_trees = 10;
    cfg.seed = 42;
    CHECK(train_regression(x, y, cfg) == train_regression(x, y, cfg));
    TrainConfig other = cfg;
    other.seed = 43;
    CHECK(!(train_regression(x, y, cfg) == train_regression(x, y, other)));
}

TEST_CASE("regression output can be clamped to the unit interval") {
    FeatureMatrix x(1);
    std::vector<double> y;
    for (int i = 0; i < 10; ++i) {
        const double row[] = {static_cast<double>(i)};
        x.add_row(row);
        y.push_back(3.0);
    }
    TrainConfig cfg = regression_defaults();
    cfg.n_trees = 3;
    const Forest f = train_regression(x, y, cfg);
    const double q[] = {4.0};
    CHECK(predict_regression(f, q) == 3.0);
    CHECK(predict_regression(f, q, true) == 1.0);
}

TEST_CASE("training rejects inconsistent input") {
    FeatureMatrix x(2);
    const double row[] = {1.0, 2.0};
    x.add_row(row);
    const std::vector<double> y{1.0, 2.0};
    CHECK_THROWS(train_regression(x, y, regression_defaults()));
    const std::vector<int> labels{3};
    CHECK_THROWS(train_classifier(x, labels, 2, classification_defaults()));
}
