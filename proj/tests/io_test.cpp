#include "support.hpp"

#include <finid/config.hpp>
#include <finid/io.hpp>

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <random>

using namespace finid;

TEST_CASE("contour files round trip") {
    ContourFile file;
    file.curves.push_back({"a", test::star(10.0, 0.1, 3, 40), {}, {}, 2, 0.75});
    file.curves.push_back({"b", make_curve({{0.1, 0.2}, {1.0 / 3.0, 2e-300}, {5, -7}}, false), 1, "ind001", {}, {}});
    const auto text = contours_to_text(file);
    CHECK(contours_from_text(text) == file);
    CHECK(contours_to_text(contours_from_text(text)) == text);
}

TEST_CASE("contour parsing reports the byte offset") {
    const std::string text = "{\"format\": \"finid-contours\", \"version\": 1, \"curves\": [}";
    try {
        contours_from_text(text);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.byte() == text.size());
    }
}

TEST_CASE("future versions are rejected without migration") {
    ContourFile file;
    file.version = 2;
    file.curves.push_back({"a", test::circle(3.0, 12), {}, {}, {}, {}});
    CHECK_THROWS_WITH_AS(contours_from_text(contours_to_text(file)), doctest::Contains("migration"), Error);
}

TEST_CASE("fin curves keep their tip and label") {
    const auto fin = render_observation(generate_population(2, 1).front(), {});
    const auto named = fin_curve("x", fin, "ind000");
    CHECK(named.tip_index == fin.tip_index);
    const auto back = curve_to_fin(named);
    CHECK(back.curve == fin.curve);
    CHECK(back.tip_index == fin.tip_index);
}

TEST_CASE("region pools round trip through contour files") {
    const auto fin = render_observation(generate_population(2, 1).front(), {});
    const auto image = synthetic_region_pool(fin, 3);
    const auto back = region_pool_from_file(contours_from_text(contours_to_text(region_pool_file(image))));
    CHECK(back.truth == image.truth);
    REQUIRE(back.regions.size() == image.regions.size());
    for (std::size_t i = 0; i < back.regions.size(); ++i) {
        CHECK(back.regions[i].boundary == image.regions[i].boundary);
        CHECK(back.regions[i].hierarchy_rank == image.regions[i].hierarchy_rank);
        CHECK(back.regions[i].id == image.regions[i].id);
    }
}

TEST_CASE("forest round trip predicts identically") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    FeatureMatrix x(5);
    std::vector<int> y;
    for (int i = 0; i < 120; ++i) {
        const double row[] = {u(rng), u(rng), u(rng), u(rng), u(rng)};
        x.add_row(row);
        y.push_back(row[0] * row[1] > 0.0 ? 1 : 0);
    }
    TrainConfig cfg = classification_defaults();
    cfg.n_trees = 12;
    const StoredModel model{train_classifier(x, y, 2, cfg), default_finspace_config({})};
    const StoredModel back = model_from_text(model_to_text(model));
    CHECK(back.forest == model.forest);
    CHECK(back.finspace == model.finspace);
    for (int i = 0; i < 100; ++i) {
        const double row[] = {u(rng), u(rng), u(rng), u(rng), u(rng)};
        CHECK(predict_proba(back.forest, row) == predict_proba(model.forest, row));
    }
    CHECK(model_to_text(back) == model_to_text(model));
}

TEST_CASE("index round trip keeps rankings") {
    EncodeParams params;
    params.contour_len = 256;
    params.interior_keypoints = 3;
    const auto pop = generate_population(5, 14);
    std::vector<std::pair<FinContour, std::string>> refs;
    for (const auto& ind : pop) refs.emplace_back(render_observation(ind, {}), ind.label);
    for (bool exact : {true, false}) {
        IndexOptions opt;
        opt.exact_mode = exact;
        const IdentityIndex index = build_index(refs, params, opt);
        const std::string bytes = index_to_bytes(index);
        const IdentityIndex back = index_from_bytes(bytes);
        CHECK(back.params() == index.params());
        CHECK(back.options() == index.options());
        CHECK(back.classes() == index.classes());
        CHECK(back.references() == index.references());
        CHECK(index_to_bytes(back) == bytes);
        std::mt19937_64 rng(3);
        for (const auto& ind : pop) {
            const auto q = render_observation(ind, sample_perturbation({}, rng));
            CHECK(classify_query(q, back).ranking == classify_query(q, index).ranking);
        }
    }
}

TEST_CASE("corrupted index files are rejected") {
    EncodeParams params;
    params.contour_len = 128;
    params.interior_keypoints = 1;
    const auto pop = generate_population(2, 14);
    std::vector<std::pair<FinContour, std::string>> refs;
    for (const auto& ind : pop) refs.emplace_back(render_observation(ind, {}), ind.label);
    std::string bytes = index_to_bytes(build_index(refs, params));
    CHECK_THROWS_AS(index_from_bytes(bytes.substr(0, bytes.size() - 3)), ParseError);
    std::string bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(index_from_bytes(bad), ParseError);
    bad = bytes;
    bad[8] = 9;
    CHECK_THROWS_WITH_AS(index_from_bytes(bad), doctest::Contains("migration"), Error);
}

TEST_CASE("datasets round trip through a directory") {
    const auto dir = test::scratch_dir("dataset");
    const auto ds = make_dataset(generate_population(3, 5), 3, {}, 5);
    write_dataset(dir + "/out", ds);
    const auto back = load_dataset(dir + "/out/manifest.json");
    CHECK(back.seed == ds.seed);
    REQUIRE(back.entries.size() == ds.entries.size());
    for (std::size_t i = 0; i < ds.entries.size(); ++i) {
        CHECK(back.entries[i].name == ds.entries[i].name);
        CHECK(back.entries[i].label == ds.entries[i].label);
        CHECK(back.entries[i].reference == ds.entries[i].reference);
        CHECK(back.entries[i].perturbation == ds.entries[i].perturbation);
        CHECK(back.entries[i].fin.curve == ds.entries[i].fin.curve);
        CHECK(back.entries[i].fin.tip_index == ds.entries[i].fin.tip_index);
    }
}

TEST_CASE("atomic writes leave no temporary files") {
    const auto dir = test::scratch_dir("atomic");
    write_atomic(dir + "/a/b/c.txt", "one");
    write_atomic(dir + "/a/b/c.txt", "two");
    CHECK(read_file(dir + "/a/b/c.txt") == "two");
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir + "/a/b")) ++files;
    CHECK(files == 1);
    CHECK_THROWS_AS(read_file(dir + "/missing"), Error);
}

TEST_CASE("report files have fixed headers") {
    const auto r = rank_classes({0.5, 2.0});
    CHECK(ranking_csv(r, {"a", "b"}) == "rank,class,score\n1,b,2\n2,a,0.5\n");
    PrCurve c;
    c.points.push_back({0.25, 1.0, 0.5});
    CHECK(pr_curve_csv(c) == "threshold,recall,precision\n0.25,1,0.5\n");
    const auto bins = per_bin_csv(std::vector<double>(kFinSpaceDim, 0.0));
    CHECK(bins.rfind("dtype,first_partition,last_partition,scale_bin,ap\n", 0) == 0);
    CHECK(std::count(bins.begin(), bins.end(), '\n') == static_cast<long>(kFinSpaceDim + 1));
}

TEST_CASE("doubles print in shortest round-trip form") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
        const double v = u(rng);
        CHECK(std::stod(format_double(v)) == v);
    }
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1.0) == "1");
}

TEST_CASE("default configuration carries the published parameters") {
    const RunConfig c;
    CHECK(c.detect.regions == 12);
    CHECK(c.detect.keypoints == 7);
    CHECK(c.detect.scale.sigma == 1.0);
    CHECK(c.detect.scale.m == 4.0);
    CHECK(c.detect.scale.resample_len == 128);
    CHECK(c.encode.interior_keypoints + 2 == 50);
    CHECK(c.encode.keypoint_sigma == 2.0);
    CHECK(c.encode.keypoint_m == 8.0);
    CHECK(c.encode.contour_len == 1024);
    CHECK(c.encode.scales == std::vector<double>{1, 2, 4, 8});
    CHECK(c.encode.descriptor_m == 2.0);
    CHECK(c.encode.descriptor_len == 256);
}

TEST_CASE("configuration documents round trip and reject unknown keys") {
    RunConfig c;
    c.encode.interior_keypoints = 14;
    c.families = FamilySelection::Both;
    c.fold_seed = 99;
    const auto text = dump_config(c);
    CHECK(dump_config(parse_config(text)) == text);
    CHECK(parse_config(text).encode.interior_keypoints == 14);
    CHECK_THROWS_WITH_AS(parse_config("{\"encode.bogus\": 1}"), doctest::Contains("unknown key"), Error);
    CHECK_THROWS_AS(parse_config("{\"encode.contour_len\": -4}"), Error);
    CHECK_THROWS_AS(parse_config("{\"identify.families\": \"all\"}"), Error);
    CHECK_THROWS_AS(parse_config("{\"synth.max_occlusion\": 0.8}"), Error);
    CHECK_THROWS_AS(parse_config("{\"encode.scales\": [1, 2"), ParseError);
}

TEST_CASE("index config hash follows encoding and index settings only") {
    RunConfig a;
    RunConfig b;
    b.synth_seed = 123;
    CHECK(index_config_hash(a.encode, a.index) == index_config_hash(b.encode, b.index));
    b.encode.descriptor_m = 3.0;
    CHECK(index_config_hash(a.encode, a.index) != index_config_hash(b.encode, b.index));
}
