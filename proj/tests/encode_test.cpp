#include <finid/encode.hpp>
#include <finid/synth.hpp>

#include <doctest.h>

#include <cmath>
#include <random>

using namespace finid;

namespace {

FinContour sample_fin(std::uint64_t seed = 5) {
    return render_observation(generate_population(2, seed).front(), {});
}

PlanarCurve transformed(const PlanarCurve& c, double angle, double scale, Point2 shift) {
    std::vector<Point2> pts;
    for (const auto& p : c.points()) {
        pts.push_back({scale * (std::cos(angle) * p.x - std::sin(angle) * p.y) + shift.x,
                       scale * (std::sin(angle) * p.x + std::cos(angle) * p.y) + shift.y});
    }
    return make_curve(std::move(pts), c.closed());
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("default encoding yields 1225 subsections on a noisy fin") {
    const auto ind = generate_population(2, 5).front();
    const auto set = generate_subsections(render_observation(ind, {0.0, 1.0, 0.002, 0.0, 1}));
    CHECK(set.interior_found == 48);
    CHECK(set.keypoints.size() == 50);
    CHECK(set.subsections.size() == 1225);
    CHECK(set.contour.size() == 1024);
    CHECK(set.keypoints.front() == 0);
    CHECK(set.keypoints.back() == 1023);
    for (const auto& s : set.subsections) {
        CHECK(s.start_kp < s.end_kp);
        CHECK(s.p == static_cast<double>(s.end_kp - s.start_kp) / 1023.0);
    }
}

TEST_CASE("subsection count follows the keypoint count") {
    EncodeParams p;
    for (std::size_t k : {2u, 5u, 14u}) {
        p.interior_keypoints = k;
        const auto set = generate_subsections(sample_fin(), p);
        const std::size_t n = set.interior_found + 2;
        CHECK(set.subsections.size() == n * (n - 1) / 2);
    }
}

TEST_CASE("fins must be open with an interior tip") {
    const auto fin = sample_fin();
    CHECK_THROWS_AS(generate_subsections({fin.curve, 0, {}}), Error);
    CHECK_THROWS_AS(generate_subsections({fin.curve, fin.curve.size() - 1, {}}), Error);
}

TEST_CASE("descriptors are unit length") {
    EncodeParams p;
    p.interior_keypoints = 6;
    const auto enc = encode_fin(sample_fin(), EncodeRole::Query, p);
    REQUIRE(!enc.descriptors.empty());
    for (const auto& d : enc.descriptors) {
        double sq = 0.0;
        for (double v : d.values) sq += v * v;
        CHECK(sq == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(d.values.size() == (d.type == DescriptorType::DogN ? 256u : 512u));
        CHECK(d.sigma == p.scales[d.scale_index]);
    }
}

TEST_CASE("reference encoding adds the reversed direction") {
    EncodeParams p;
    p.interior_keypoints = 6;
    const auto fin = sample_fin();
    const auto q = encode_fin(fin, EncodeRole::Query, p);
    const auto r = encode_fin(fin, EncodeRole::Reference, p);
    CHECK(q.descriptors.size() + q.degenerate == q.subsections.subsections.size() * 8);
    CHECK(r.descriptors.size() + r.degenerate == 2 * (q.descriptors.size() + q.degenerate));
}

TEST_CASE("reversed DoG_N descriptors mirror the forward ones") {
    EncodeParams p;
    p.interior_keypoints = 6;
    const auto set = generate_subsections(sample_fin(), p);
    for (const auto& sub : set.subsections) {
        Subsection rev = sub;
        rev.direction = Direction::Reverse;
        const auto f = encode_dogn(sub, set.contour, p);
        const auto b = encode_dogn(rev, set.contour, p);
        for (std::size_t j = 0; j < f.size(); ++j) {
            std::vector<double> mirrored(b[j].values.rbegin(), b[j].values.rend());
            CHECK(max_abs_diff(f[j].values, mirrored) < 1e-9);
        }
    }
}

TEST_CASE("descriptors are invariant to rotation, translation and scale") {
    const auto fin = sample_fin(9);
    const auto set = generate_subsections(fin);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> angle(-3.0, 3.0);
    std::uniform_real_distribution<double> scale(0.3, 4.0);
    std::uniform_real_distribution<double> shift(-500.0, 500.0);
    for (int trial = 0; trial < 20; ++trial) {
        const auto moved = transformed(set.contour, angle(rng), scale(rng), {shift(rng), shift(rng)});
        const std::size_t a = rng() % 1000;
        const std::size_t b = a + 5 + rng() % (1018 - a);
        const Subsection sub{a, b, 0.0, trial % 2 ? Direction::Reverse : Direction::Forward};
        const auto d0 = encode_dogn(sub, set.contour);
        const auto d1 = encode_dogn(sub, moved);
        const auto n0 = encode_normal(sub, set.contour);
        const auto n1 = encode_normal(sub, moved);
        for (std::size_t j = 0; j < d0.size(); ++j) {
            CHECK(max_abs_diff(d0[j].values, d1[j].values) < 1e-6);
            CHECK(max_abs_diff(n0[j].values, n1[j].values) < 1e-6);
        }
    }
}

TEST_CASE("straight subsections have degenerate DoG_N descriptors") {
    std::vector<Point2> pts;
    for (int i = 0; i < 300; ++i) pts.push_back({static_cast<double>(i), 0.5 * i});
    const auto line = make_curve(pts, false);
    for (const auto& d : encode_dogn({0, 299, 1.0, Direction::Forward}, line)) CHECK(d.degenerate);
}

TEST_CASE("tip location picks the extreme vertex of synthetic fins") {
    const auto pop = generate_population(5, 3);
    for (const auto& ind : pop) {
        const auto fin = render_observation(ind, {});
        CHECK(locate_tip(fin.curve) == fin.tip_index);
        CHECK(distance(fin.curve[fin.tip_index], ind.tip) < 1.0);
    }
}
