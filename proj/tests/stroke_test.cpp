#include "support.hpp"

#include <finid/stroke.hpp>
#include <finid/synth.hpp>

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <set>

using namespace finid;

namespace {

// Kuhn's augmenting paths on the tolerance graph.
std::size_t oracle_matching(const std::vector<Pixel>& a, const std::vector<Pixel>& b, double tol) {
    std::vector<int> owner(b.size(), -1);
    std::function<bool(std::size_t, std::vector<char>&)> augment = [&](std::size_t i, std::vector<char>& seen) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            const double dx = a[i].x - b[j].x;
            const double dy = a[i].y - b[j].y;
            if (seen[j] || dx * dx + dy * dy > tol * tol) continue;
            seen[j] = 1;
            if (owner[j] < 0 || augment(static_cast<std::size_t>(owner[j]), seen)) {
                owner[j] = static_cast<int>(i);
                return true;
            }
        }
        return false;
    };
    std::size_t matched = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        std::vector<char> seen(b.size(), 0);
        if (augment(i, seen)) ++matched;
    }
    return matched;
}

std::vector<Pixel> random_pixels(std::mt19937_64& rng, std::size_t n, int span) {
    std::set<Pixel> s;
    while (s.size() < n) s.insert({static_cast<int>(rng() % span), static_cast<int>(rng() % span)});
    return {s.begin(), s.end()};
}

std::vector<Pixel> row(int from, int to, int y) {
    std::vector<Pixel> out;
    for (int x = from; x < to; ++x) out.push_back({x, y});
    return out;
}

}  // namespace

TEST_CASE("rasterised curves are 8-connected without repeats") {
    const auto px = rasterize(test::star(40.0, 0.3, 5, 90));
    const std::set<Pixel> unique(px.begin(), px.end());
    CHECK(unique.size() == px.size());
    for (std::size_t i = 0; i + 1 < px.size(); ++i) {
        CHECK(std::abs(px[i].x - px[i + 1].x) <= 1);
        CHECK(std::abs(px[i].y - px[i + 1].y) <= 1);
    }
}

TEST_CASE("boundary F-measure of identical and half-covering contours") {
    const auto truth = row(0, 100, 0);
    const auto same = boundary_f_measure(truth, truth, 2.0);
    CHECK(same.f == 1.0);
    const auto half = boundary_f_measure(row(0, 50, 0), truth, 2.0);
    CHECK(half.precision == 1.0);
    CHECK(half.recall == 0.5);
    CHECK(half.f == 2.0 / 3.0);

    const auto shifted = row(0, 100, 2);
    CHECK(boundary_f_measure(shifted, truth, 2.0).f == 1.0);
    CHECK(boundary_f_measure(shifted, truth, 1.5).f == 0.0);

    const auto curve = test::star(30.0, 0.2, 4, 120);
    CHECK(contour_f_measure(curve, curve).f == 1.0);
    CHECK_THROWS_AS(boundary_f_measure(truth, {}, 2.0), Error);
}

TEST_CASE("boundary matching is a maximum bipartite matching") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        const auto a = random_pixels(rng, 1 + rng() % 25, 12);
        const auto b = random_pixels(rng, 1 + rng() % 25, 12);
        const double tol = 1.0 + static_cast<double>(rng() % 3);
        const auto f = boundary_f_measure(a, b, tol);
        CHECK(f.exact);
        CHECK(f.matched == oracle_matching(a, b, tol));
    }
}

TEST_CASE("region masks measure overlap") {
    const RegionMask big(test::circle(20.0, 200, {50, 50}));
    const RegionMask same(test::circle(20.0, 200, {50, 50}));
    const RegionMask far(test::circle(5.0, 60, {200, 200}));
    CHECK(big.area() == doctest::Approx(400.0 * std::numbers::pi).epsilon(0.05));
    CHECK(big.overlap(same) == 1.0);
    CHECK(big.overlap(far) == 0.0);
}

TEST_CASE("region filtering drops short contours and near duplicates") {
    std::vector<RegionContour> pool{
        {test::circle(30.0, 200, {100, 100}), 0, 0},
        {test::circle(30.2, 200, {100, 100}), 1, 1},
        {test::circle(5.0, 40, {10, 10}), 2, 2},
        {test::circle(25.0, 200, {300, 100}), 3, 3},
    };
    const auto kept = filter_regions(pool, 12, 70.0, 0.95);
    std::vector<int> ids;
    for (const auto& r : kept) ids.push_back(r.id);
    CHECK(std::find(ids.begin(), ids.end(), 2) == ids.end());
    CHECK(std::find(ids.begin(), ids.end(), 3) != ids.end());
    CHECK(ids.size() == 2);
    CHECK(filter_regions(pool, 1, 70.0, 0.95).size() == 1);
    CHECK_THROWS_AS(filter_regions({}, 12, 70.0, 0.95), Error);
}

TEST_CASE("twelve regions with seven keypoints give 504 strokes") {
    std::vector<RegionContour> regions;
    for (int i = 0; i < 12; ++i) {
        regions.push_back({test::star(40.0 + 3.0 * i, 0.25, 7, 210, {100.0 * i, 0.0}), i, i});
    }
    const auto pool = generate_stroke_pool(regions, 7);
    CHECK(pool.strokes.size() == 504);
    for (std::size_t k : pool.keypoints_per_region) CHECK(k == 7);
    for (const auto& s : pool.strokes) {
        CHECK(s.start_kp != s.end_kp);
        CHECK(!s.points.closed());
    }
}

TEST_CASE("normal histogram is unit length with one vote per segment") {
    std::vector<Point2> pts;
    for (int i = 0; i <= 100; ++i) pts.push_back({static_cast<double>(i), 0.0});
    const auto h = normal_histogram(make_curve(pts, false));
    REQUIRE(h.size() == kNormalSpatialBins * kNormalOrientationBins);
    double sq = 0.0;
    std::size_t nonzero = 0;
    for (double v : h) {
        sq += v * v;
        if (v > 0.0) ++nonzero;
    }
    CHECK(sq == doctest::Approx(1.0));
    CHECK(nonzero == kNormalSpatialBins);
    for (std::size_t b = 0; b < kNormalSpatialBins; ++b) CHECK(h[b * kNormalOrientationBins + 2] > 0.0);
}

TEST_CASE("stroke NMS keeps the best of overlapping strokes") {
    std::vector<Point2> a, b, c;
    for (int i = 0; i < 60; ++i) {
        a.push_back({static_cast<double>(i), 0.0});
        b.push_back({static_cast<double>(i), 1.0});
        c.push_back({static_cast<double>(i), 40.0});
    }
    const std::vector<Stroke> strokes{{0, 0, 1, Direction::Forward, make_curve(a, false)},
                                      {0, 0, 1, Direction::Forward, make_curve(b, false)},
                                      {0, 0, 1, Direction::Forward, make_curve(c, false)}};
    CHECK(stroke_nms(strokes, {0.5, 0.9, 0.1}, 0.2, 2.0) == std::vector<std::size_t>{1, 2});
    CHECK(stroke_nms(strokes, {0.5, 0.9, 0.1}, 1.0, 2.0) == std::vector<std::size_t>{1, 0, 2});
}

TEST_CASE("detection AP on a three image toy set") {
    const std::vector<std::size_t> truths{1, 2, 1};
    const std::vector<Detection> dets{
        {0, 0.9, {0.8}}, {1, 0.8, {0.3, 0.9}}, {0, 0.7, {0.85}}, {2, 0.6, {0.2}}, {1, 0.5, {0.7, 0.1}},
    };
    // t = 0.5: hits at ranks 1, 2, 5 out of four truths.
    CHECK(detection_ap(dets, truths, 0.5) == doctest::Approx((1.0 + 1.0 + 3.0 / 5.0) / 4.0).epsilon(1e-12));
    // t = 0.85: hits at ranks 2, 3.
    CHECK(detection_ap(dets, truths, 0.85) == doctest::Approx((1.0 / 2.0 + 2.0 / 3.0) / 4.0).epsilon(1e-12));
    CHECK(detection_ap(dets, truths, 0.95) == 0.0);

    const auto grid = quality_grid(20);
    CHECK(grid.front() == 0.025);
    CHECK(grid.back() == 0.975);
    const auto ev = evaluate_detection(dets, truths, {0.5}, 20);
    double mean = 0.0;
    for (double t : grid) mean += detection_ap(dets, truths, t);
    CHECK(ev.ap_vol == doctest::Approx(mean / 20.0).epsilon(1e-15));
    CHECK(ev.ap.size() == 1);
}

TEST_CASE("quality model ranks the fin stroke first") {
    const auto pop = generate_population(4, 21);
    std::vector<DetectionImage> train;
    for (std::size_t i = 0; i < 3; ++i) train.push_back(synthetic_region_pool(render_observation(pop[i], {}), i));
    DetectionParams params;
    TrainConfig cfg = regression_defaults();
    cfg.n_trees = 20;
    const Forest model = train_quality_model(train, params, cfg);

    const DetectionImage test = synthetic_region_pool(render_observation(pop[3], {}), 99);
    const auto strokes = image_strokes(test, params);
    const auto kept = score_and_nms(strokes.strokes, model, params.nms_overlap);
    REQUIRE(!kept.empty());
    CHECK(contour_f_measure(kept.front().stroke.points, test.truth).f > 0.8);
    for (std::size_t i = 1; i < kept.size(); ++i) CHECK(kept[i - 1].score.f_pred >= kept[i].score.f_pred);
}
