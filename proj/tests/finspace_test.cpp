#include "oracles.hpp"

#include <finid/finspace.hpp>
#include <finid/synth.hpp>

#include <doctest.h>

#include <random>
#include <set>

using namespace finid;

TEST_CASE("fin space has 55 spatial bins and 550 dimensions") {
    CHECK(kSpatialBins == 55);
    CHECK(kFinSpaceDim == 550);
    CHECK(kFinSpaceDim == 2 * 55 * 5);
}

TEST_CASE("spatial index enumerates contiguous partition runs") {
    std::set<std::size_t> seen;
    std::size_t expected = 0;
    for (int i = 1; i <= 10; ++i) {
        for (int j = i; j <= 10; ++j) {
            const std::size_t idx = spatial_index({i, j});
            CHECK(idx == expected++);
            CHECK(spatial_interval(idx) == PartitionInterval{i, j});
            seen.insert(idx);
        }
    }
    CHECK(seen.size() == 55);
    CHECK(spatial_index({1, 10}) == 9);
    CHECK(spatial_index({10, 10}) == 54);
    CHECK_THROWS_AS(spatial_index({3, 2}), Error);
    CHECK_THROWS_AS(spatial_interval(55), Error);
}

TEST_CASE("edge partitions split each edge into five") {
    const auto part = EdgePartitioning::from_tip(0.4);
    CHECK(part.bounds[0] == 0.0);
    CHECK(part.bounds[5] == 0.4);
    CHECK(part.bounds[10] == 1.0);
    CHECK(part.bounds[2] == doctest::Approx(0.16));
    CHECK(part.bounds[7] == doctest::Approx(0.64));
    CHECK_THROWS_AS(EdgePartitioning::from_tip(1.0), Error);
}

TEST_CASE("occupancy needs more than half a partition") {
    const auto part = EdgePartitioning::from_tip(0.5);
    CHECK(occupied_interval(0.0, 1.0, part) == PartitionInterval{1, 10});
    CHECK(occupied_interval(0.0, 0.05, part) == std::nullopt);
    CHECK(occupied_interval(0.0, 0.051, part) == PartitionInterval{1, 1});
    CHECK(occupied_interval(0.44, 0.56, part) == PartitionInterval{5, 6});
    CHECK(occupied_interval(0.56, 0.44, part) == PartitionInterval{5, 6});
}

TEST_CASE("occupancy agrees with direct overlap measurement") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 2000; ++trial) {
        const double tip = 0.05 + 0.9 * u(rng);
        double a = u(rng), b = u(rng);
        if (a > b) std::swap(a, b);
        CHECK(occupied_interval(a, b, EdgePartitioning::from_tip(tip)).has_value() == test::oracle_binned(a, b, tip));
    }
}

TEST_CASE("global sigma substitutes into the scale formula") {
    CHECK(sigma_global(4.0, 256.0, 0.5) == 0.0078125);
    CHECK(sigma_global(8.0, 256.0, 1.0) == 8.0 / 256.0);
}

TEST_CASE("default scale bins cover the reachable global sigma range") {
    const EncodeParams p;
    const auto cfg = default_finspace_config(p);
    REQUIRE(cfg.scale_edges.size() == 6);
    CHECK(cfg.scale_edges.front() == doctest::Approx(1.0 / 1023.0 / 256.0));
    CHECK(cfg.scale_edges.back() == doctest::Approx(8.0 / 256.0));
    for (std::size_t b = 1; b < 6; ++b) {
        CHECK(cfg.scale_edges[b] / cfg.scale_edges[b - 1] ==
              doctest::Approx(cfg.scale_edges[1] / cfg.scale_edges[0]));
    }
    CHECK(scale_bin(0.0, cfg) == 0);
    CHECK(scale_bin(1.0, cfg) == 4);
    CHECK(scale_bin(cfg.scale_edges[2], cfg) == 1);
}

TEST_CASE("flat coordinates round trip") {
    for (std::size_t f = 0; f < kFinSpaceDim; ++f) CHECK(coordinate_from_flat(f).flat() == f);
    CHECK(FinSpaceCoordinate{DescriptorType::Normal, 54, 4}.flat() == 549);
}

TEST_CASE("scoring vectors pool binned LNBNN scores exactly") {
    EncodeParams params;
    params.contour_len = 256;
    params.interior_keypoints = 3;
    params.scales = {1.0, 2.0};
    const auto pop = generate_population(6, 40);
    std::vector<std::pair<FinContour, std::string>> refs;
    for (const auto& ind : pop) refs.emplace_back(render_observation(ind, {}), ind.label);
    const IdentityIndex index = build_index(refs, params);
    const FinSpace space(index, default_finspace_config(params));
    const auto oracle_refs = test::oracle_references(refs, index.classes(), params);

    std::mt19937_64 rng(1);
    for (const auto& ind : pop) {
        const auto fin = render_observation(ind, sample_perturbation({}, rng));
        const auto query = encode_fin(fin, EncodeRole::Query, params).descriptors;
        const auto vectors = build_scoring_vectors(match_descriptors(query, index), index, space);
        const auto want = test::oracle_binned_totals(query, oracle_refs, index.classes().size());
        for (std::size_t c = 0; c < vectors.size(); ++c) {
            CHECK(vectors[c].sum() == doctest::Approx(want[c]).epsilon(1e-9));
            CHECK(build_scoring_vector(fin, static_cast<int>(c), index, space).values == vectors[c].values);
        }
    }
}

TEST_CASE("individuals split into two disjoint seeded folds") {
    std::vector<std::string> labels;
    for (int i = 0; i < 9; ++i) {
        labels.push_back("ind" + std::to_string(i));
        labels.push_back("ind" + std::to_string(i));
    }
    const auto a = split_individuals(labels, 3);
    CHECK(a == split_individuals(labels, 3));
    CHECK(a[0].size() == 5);
    CHECK(a[1].size() == 4);
    std::set<std::string> all(a[0].begin(), a[0].end());
    all.insert(a[1].begin(), a[1].end());
    CHECK(all.size() == 9);
    bool differs = false;
    for (std::uint64_t s = 0; s < 10 && !differs; ++s) differs = split_individuals(labels, s) != a;
    CHECK(differs);
}

TEST_CASE("reliability training cross-validates on held-out individuals") {
    EncodeParams params;
    params.contour_len = 256;
    params.interior_keypoints = 4;
    const auto pop = generate_population(6, 50);
    const auto ds = make_dataset(pop, 3, {}, 50);
    std::vector<LabelledFin> fins;
    for (const auto& e : ds.entries) fins.push_back({e.fin, e.label, e.reference});
    ReliabilityConfig cfg;
    cfg.forest.n_trees = 20;
    const auto tr = train_reliability_model(fins, params, {}, cfg);

    CHECK(tr.model.n_features == kFinSpaceDim);
    CHECK(tr.model.n_classes == 2);
    std::size_t queries = 0;
    for (const auto& fold : tr.folds) {
        queries += fold.model.size();
        CHECK(fold.vectors.size() == fold.positive.size());
        for (const auto& o : fold.model) {
            const auto& members = fold.individuals;
            CHECK(o.result.ranking.size() == members.size());
        }
    }
    CHECK(queries == 12);
    CHECK(tr.model_eval.ap >= 0.0);
    CHECK(tr.model_eval.ap <= 1.0);
    const auto again = train_reliability_model(fins, params, {}, cfg);
    CHECK(again.model == tr.model);
    CHECK(again.model_eval.ap == tr.model_eval.ap);

    std::vector<LabelledFin> few(fins.begin(), fins.begin() + 9);
    CHECK_THROWS_AS(train_reliability_model(few, params, {}, cfg), Error);
}

TEST_CASE("per-bin AP is defined for every coordinate") {
    std::vector<ScoringVector> v(4);
    v[0].values[3] = 2.0;
    v[1].values[3] = 1.0;
    v[2].values[3] = 3.0;
    const std::vector<char> pos{1, 0, 1, 0};
    const auto ap = per_bin_ap(v, pos);
    REQUIRE(ap.size() == kFinSpaceDim);
    CHECK(ap[3] == 1.0);
}
