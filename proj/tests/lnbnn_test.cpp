#include "oracles.hpp"

#include <finid/lnbnn.hpp>
#include <finid/synth.hpp>

#include <doctest.h>

#include <random>

using namespace finid;

namespace {

EncodeParams small_params() {
    EncodeParams p;
    p.contour_len = 256;
    p.interior_keypoints = 1;
    p.scales = {1.0, 2.0};
    return p;
}

struct Instance {
    std::vector<std::pair<FinContour, std::string>> refs;
    std::vector<std::pair<FinContour, std::string>> queries;
};

Instance make_instance(std::size_t classes, std::uint64_t seed) {
    const auto pop = generate_population(classes, seed);
    Instance inst;
    std::mt19937_64 rng(seed);
    for (const auto& ind : pop) {
        inst.refs.emplace_back(render_observation(ind, {}), ind.label);
        for (int k = 0; k < 2; ++k) {
            inst.queries.emplace_back(render_observation(ind, sample_perturbation({}, rng)), ind.label);
        }
    }
    return inst;
}

}  // namespace

TEST_CASE("exact classification equals an exhaustive LNBNN oracle") {
    const auto params = small_params();
    const auto inst = make_instance(10, 31);
    const IdentityIndex index = build_index(inst.refs, params);
    const auto oracle_refs = test::oracle_references(inst.refs, index.classes(), params);
    CHECK(oracle_refs.size() == index.references().size());

    for (auto families : {FamilySelection::DogN, FamilySelection::Normal, FamilySelection::Both}) {
        ClassifyOptions opt;
        opt.families = families;
        for (const auto& [fin, label] : inst.queries) {
            const auto got = classify_query(fin, index, opt);
            const auto query = encode_fin(fin, EncodeRole::Query, params).descriptors;
            const auto totals = test::oracle_totals(query, oracle_refs, index.classes().size(), families);
            const auto order = test::oracle_order(totals);
            REQUIRE(got.ranking.size() == order.size());
            for (std::size_t r = 0; r < order.size(); ++r) {
                CHECK(got.ranking[r].first == order[r]);
                CHECK(got.ranking[r].second == doctest::Approx(totals[static_cast<std::size_t>(order[r])]).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("only the nearest neighbour's class scores") {
    const auto params = small_params();
    const auto inst = make_instance(6, 8);
    const IdentityIndex index = build_index(inst.refs, params);
    const auto query = encode_fin(inst.queries.front().first, EncodeRole::Query, params).descriptors;
    const auto matches = match_descriptors(query, index);
    REQUIRE(!matches.empty());
    for (const auto& m : matches) {
        CHECK(m.score >= 0.0);
        CHECK(m.score == doctest::Approx(std::max(0.0, m.delta_other - m.delta_class)));
        const auto& d = query[m.query_descriptor];
        for (int c = 0; c < static_cast<int>(index.classes().size()); ++c) {
            const auto local = local_score(d, c, index);
            if (c == m.class_id) {
                CHECK(local.score == doctest::Approx(m.score).epsilon(1e-12));
            } else {
                CHECK(local.score == 0.0);
            }
        }
    }
}

TEST_CASE("approximate search with an unbounded budget matches exact search") {
    const auto params = small_params();
    const auto inst = make_instance(8, 12);
    IndexOptions approx;
    approx.exact_mode = false;
    approx.checks = 1u << 20;
    const IdentityIndex exact_index = build_index(inst.refs, params);
    const IdentityIndex approx_index = build_index(inst.refs, params, approx);
    for (const auto& [fin, label] : inst.queries) {
        const auto a = classify_query(fin, exact_index);
        const auto b = classify_query(fin, approx_index);
        REQUIRE(a.ranking.size() == b.ranking.size());
        for (std::size_t r = 0; r < a.ranking.size(); ++r) {
            CHECK(a.ranking[r].first == b.ranking[r].first);
            CHECK(a.ranking[r].second == doctest::Approx(b.ranking[r].second).epsilon(1e-12));
        }
    }
}

TEST_CASE("scale weights scale the per-scale totals") {
    const auto params = small_params();
    const auto inst = make_instance(4, 2);
    const IdentityIndex index = build_index(inst.refs, params);
    const auto query = encode_fin(inst.queries[1].first, EncodeRole::Query, params).descriptors;
    const auto matches = match_descriptors(query, index);
    ClassifyOptions s0, s1, w;
    s0.only_scale = 0;
    s1.only_scale = 1;
    w.weights = {2.0, 0.5};
    const auto t0 = class_totals(matches, 4, s0);
    const auto t1 = class_totals(matches, 4, s1);
    const auto tw = class_totals(matches, 4, w);
    for (std::size_t c = 0; c < 4; ++c) CHECK(tw[c] == doctest::Approx(2.0 * t0[c] + 0.5 * t1[c]));
    w.weights = {1.0};
    CHECK_THROWS_AS(class_totals(matches, 4, w), Error);
}

TEST_CASE("rankings break ties by class id") {
    const auto r = rank_classes({1.0, 3.0, 1.0, 3.0});
    const std::vector<std::pair<int, double>> want{{1, 3.0}, {3, 3.0}, {0, 1.0}, {2, 1.0}};
    CHECK(r.ranking == want);
    CHECK(r.score_of(2) == 1.0);
}

TEST_CASE("identification evaluation on a hand example") {
    std::vector<QueryOutcome> outcomes{
        {rank_classes({5.0, 3.0, 0.0}), 0},
        {rank_classes({4.0, 2.0, 0.0}), 1},
    };
    const auto ev = evaluate_identification(outcomes);
    // Pooled order 5+ 4 3 2+ then a tie at 0: precision 1 at recall 1/2, 1/2 at recall 1.
    CHECK(ev.ap == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(ev.top1 == 0.5);
    REQUIRE(ev.per_individual.size() == 2);
    CHECK(ev.per_individual[0].second == 1.0);
    CHECK(ev.per_individual[1].second == 0.5);
    CHECK(ev.map == 0.75);

    const auto zero = evaluate_identification({{rank_classes({0.0, 0.0}), 0}});
    CHECK(zero.top1 == 0.0);
}

TEST_CASE("precision-recall groups tied scores") {
    const std::vector<double> scores{0.9, 0.5, 0.5, 0.1};
    const std::vector<char> pos{0, 1, 0, 1};
    const auto pr = precision_recall(scores, pos);
    REQUIRE(pr.points.size() == 3);
    CHECK(pr.points[0].precision == 0.0);
    CHECK(pr.points[1].recall == 0.5);
    CHECK(pr.points[1].precision == 1.0 / 3.0);
    CHECK(pr.ap == doctest::Approx(0.5 / 3.0 + 0.5 * 0.5));
}

TEST_CASE("index construction needs two classes") {
    const auto inst = make_instance(2, 4);
    std::vector<std::pair<FinContour, std::string>> one{inst.refs.front()};
    CHECK_THROWS_AS(build_index(one, small_params()), Error);
}
