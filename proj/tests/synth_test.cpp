#include <finid/synth.hpp>

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace finid;

namespace {

double oracle_hausdorff(const PlanarCurve& a, const PlanarCurve& b) {
    const auto directed = [](const PlanarCurve& x, const PlanarCurve& y) {
        double worst = 0.0;
        for (const auto& p : x.points()) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& q : y.points()) best = std::min(best, distance(p, q));
            worst = std::max(worst, best);
        }
        return worst;
    };
    return std::max(directed(a, b), directed(b, a));
}

}  // namespace

TEST_CASE("population generation is deterministic per seed") {
    CHECK(generate_population(8, 3) == generate_population(8, 3));
    CHECK(!(generate_population(8, 3) == generate_population(8, 4)));
    const auto pop = generate_population(12, 3);
    CHECK(pop[4].label == "ind004");
    for (const auto& ind : pop) {
        CHECK(ind.jags.size() >= 3);
        CHECK(ind.jags.size() <= 7);
    }
}

TEST_CASE("individuals are separated along the trailing edge") {
    const auto pop = generate_population(15, 9);
    for (std::size_t i = 0; i < pop.size(); ++i) {
        for (std::size_t j = i + 1; j < pop.size(); ++j) {
            const double h = hausdorff_distance(trailing_edge(pop[i]), trailing_edge(pop[j]));
            CHECK(h > 2.0);
            CHECK(h == doctest::Approx(oracle_hausdorff(trailing_edge(pop[i]), trailing_edge(pop[j]))).epsilon(1e-12));
        }
    }
}

TEST_CASE("contours are sampled about one unit apart") {
    const auto c = base_contour(generate_population(2, 1).front());
    CHECK(!c.closed());
    for (std::size_t i = 0; i + 1 < c.size(); ++i) {
        const double d = distance(c[i], c[i + 1]);
        CHECK(d > 0.0);
        CHECK(d <= 1.5);
    }
}

TEST_CASE("rotation and scale act about the origin") {
    const auto ind = generate_population(2, 6).front();
    const auto base = render_observation(ind, {});
    const double angle = 0.2;
    const auto moved = render_observation(ind, {angle, 1.1, 0.0, 0.0, 0});
    REQUIRE(moved.curve.size() == base.curve.size());
    for (std::size_t i = 0; i < base.curve.size(); ++i) {
        const auto& p = base.curve[i];
        const Point2 want{1.1 * (std::cos(angle) * p.x - std::sin(angle) * p.y),
                          1.1 * (std::sin(angle) * p.x + std::cos(angle) * p.y)};
        CHECK(distance(moved.curve[i], want) < 1e-9);
    }
    CHECK(moved.tip_index == base.tip_index);
}

TEST_CASE("noise has the requested spread") {
    const auto ind = generate_population(2, 6).front();
    const auto base = render_observation(ind, {});
    const auto noisy = render_observation(ind, {0.0, 1.0, 0.002, 0.0, 77});
    double sq = 0.0;
    for (std::size_t i = 0; i < base.curve.size(); ++i) {
        const Point2 d = noisy.curve[i] - base.curve[i];
        sq += d.x * d.x + d.y * d.y;
    }
    const double sd = std::sqrt(sq / (2.0 * static_cast<double>(base.curve.size())));
    CHECK(sd == doctest::Approx(0.002 * base.curve.length()).epsilon(0.1));
}

TEST_CASE("occlusion removes the leading end") {
    const auto ind = generate_population(2, 6).front();
    const auto base = render_observation(ind, {});
    const auto cut = render_observation(ind, {0.0, 1.0, 0.0, 0.2, 0});
    CHECK(cut.curve.length() == doctest::Approx(0.8 * base.curve.length()).epsilon(1e-9));
    CHECK(cut.curve.points().back() == base.curve.points().back());
    CHECK_THROWS_AS(render_observation(ind, {0.0, 1.0, 0.0, 0.75, 0}), Error);
    CHECK_THROWS_AS(render_observation(ind, {0.0, 1.0, 0.0, -0.1, 0}), Error);
}

TEST_CASE("perturbations stay inside their range") {
    std::mt19937_64 rng(2);
    const PerturbationRange range;
    for (int i = 0; i < 500; ++i) {
        const auto p = sample_perturbation(range, rng);
        CHECK(std::abs(p.rotation) <= range.max_rotation);
        CHECK(p.scale >= range.min_scale);
        CHECK(p.scale <= range.max_scale);
        CHECK(p.noise <= range.max_noise);
        CHECK(p.occlusion <= range.max_occlusion);
    }
}

TEST_CASE("datasets hold one reference and per-1 queries per individual") {
    const auto pop = generate_population(25, 7);
    const auto ds = make_dataset(pop, 6, {}, 7);
    CHECK(ds.entries.size() == 150);
    std::size_t refs = 0;
    for (const auto& e : ds.entries) refs += e.reference ? 1 : 0;
    CHECK(refs == 25);
    CHECK(ds.entries[0].name == "ind000_ref");
    CHECK(ds.entries[5].name == "ind000_q5");
    const auto again = make_dataset(pop, 6, {}, 7);
    for (std::size_t i = 0; i < ds.entries.size(); ++i) {
        CHECK(ds.entries[i].perturbation == again.entries[i].perturbation);
        CHECK(ds.entries[i].fin.curve == again.entries[i].fin.curve);
    }
    CHECK_THROWS_AS(make_dataset(pop, 1, {}, 7), Error);
}

TEST_CASE("synthetic region pools embed the fin in ranked regions") {
    const auto fin = render_observation(generate_population(2, 2).front(), {});
    const auto image = synthetic_region_pool(fin, 4);
    CHECK(image.regions.size() == 9);
    CHECK(image.truth == fin.curve);
    for (std::size_t i = 0; i < image.regions.size(); ++i) CHECK(image.regions[i].hierarchy_rank == static_cast<int>(i));
}
