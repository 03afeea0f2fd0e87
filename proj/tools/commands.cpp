#include "commands.hpp"

#include <finid/config.hpp>
#include <finid/finspace.hpp>
#include <finid/io.hpp>
#include <finid/raster.hpp>
#include <finid/stroke.hpp>
#include <finid/synth.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

namespace finid::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

class UsageError : public Error {
public:
    using Error::Error;
};

RunConfig config_from(const std::string& path) {
    return path.empty() ? RunConfig{} : load_config(path);
}

/// Index built with settings other than the explicit --config is rejected.
void check_index_config(const IdentityIndex& index, const std::string& config_path) {
    if (config_path.empty()) return;
    const RunConfig cfg = load_config(config_path);
    if (index_config_hash(cfg.encode, cfg.index) != index_config_hash(index.params(), index.options())) {
        throw Error("configuration does not match the index encoding settings");
    }
}

FinSpace checked_space(const IdentityIndex& index, const StoredModel& model, const std::string& config_path) {
    if (!model.finspace) throw Error("model has no fin-space configuration");
    RunConfig cfg = config_from(config_path);
    cfg.encode = index.params();
    if (!(finspace_config(cfg) == *model.finspace)) {
        throw Error("fin-space configuration of the model does not match the index");
    }
    return FinSpace(index, *model.finspace);
}

json evaluation_json(const std::string& method, const IdentificationEvaluation& ev, std::size_t queries,
                     const std::vector<std::string>& classes) {
    json per = json::object();
    for (const auto& [cls, ap] : ev.per_individual) per[classes.at(static_cast<std::size_t>(cls))] = ap;
    json pr = json::array();
    for (const auto& p : ev.pooled.points) pr.push_back({p.threshold, p.recall, p.precision});
    return {{"format", "finid-evaluation"},
            {"version", kFormatVersion},
            {"method", method},
            {"queries", queries},
            {"ap", ev.ap},
            {"map", ev.map},
            {"top1", ev.top1},
            {"per_individual", per},
            {"pr", pr}};
}

std::vector<DetectionImage> dataset_pools(const std::string& manifest_path, std::vector<std::string>* names) {
    const json doc = json::parse(read_file(manifest_path));
    const fs::path dir = fs::path(manifest_path).parent_path();
    std::vector<DetectionImage> images;
    for (const auto& e : doc.at("entries")) {
        images.push_back(region_pool_from_file(load_contours((dir / e.at("pool").get<std::string>()).string())));
        if (names) names->push_back(e.at("name").get<std::string>());
    }
    return images;
}

int cmd_synth(const RunConfig& cfg, std::size_t individuals, std::size_t per, std::uint64_t seed, const std::string& out_dir,
              std::ostream& out) {
    const auto population = generate_population(individuals, seed, cfg.population);
    const Dataset ds = make_dataset(population, per, cfg.perturbation, seed);
    write_dataset(out_dir, ds);
    out << "wrote " << ds.entries.size() << " observations of " << individuals << " individuals to " << out_dir << "\n";
    return 0;
}

int cmd_detect(const RunConfig& cfg, const std::string& manifest, const std::string& pool, const std::string& model_path,
               bool train, const std::string& out_path, std::ostream& out) {
    if (train) {
        if (manifest.empty() || model_path.empty()) throw UsageError("detect --train needs --manifest and --model");
        const auto images = dataset_pools(manifest, nullptr);
        save_model(model_path, {train_quality_model(images, cfg.detect, cfg.quality_forest), std::nullopt});
        out << "trained quality model on " << images.size() << " images\n";
        return 0;
    }
    if (model_path.empty() || out_path.empty()) throw UsageError("detect needs --model and --out");
    const StoredModel model = load_model(model_path);
    if (model.forest.task != Task::Regression) throw Error("detect: model is not a quality regressor");

    const auto run = [&](const DetectionImage& image, std::vector<Detection>* dets, std::size_t image_id) {
        const StrokePool strokes = image_strokes(image, cfg.detect);
        auto kept = score_and_nms(strokes.strokes, model.forest, cfg.detect.nms_overlap, {}, cfg.detect.tolerance);
        ContourFile file;
        for (std::size_t i = 0; i < kept.size(); ++i) {
            file.curves.push_back({"stroke" + std::to_string(i), kept[i].stroke.points, {}, {}, kept[i].stroke.parent,
                                   kept[i].score.f_pred});
            if (dets) {
                dets->push_back({image_id, kept[i].score.f_pred,
                                 {contour_f_measure(kept[i].stroke.points, image.truth, cfg.detect.tolerance).f}});
            }
        }
        return file;
    };

    if (!pool.empty()) {
        save_contours(out_path, run(region_pool_from_file(load_contours(pool)), nullptr, 0));
        return 0;
    }
    if (manifest.empty()) throw UsageError("detect needs --pool or --manifest");
    std::vector<std::string> names;
    const auto images = dataset_pools(manifest, &names);
    std::vector<Detection> dets;
    for (std::size_t i = 0; i < images.size(); ++i) {
        save_contours((fs::path(out_path) / (names[i] + ".detections.json")).string(), run(images[i], &dets, i));
    }
    const std::vector<std::size_t> truths(images.size(), 1);
    const auto ev = evaluate_detection(dets, truths, quality_grid(cfg.detect_volume_grid), cfg.detect_volume_grid);
    json table = json::array();
    for (std::size_t i = 0; i < ev.thresholds.size(); ++i) table.push_back({ev.thresholds[i], ev.ap[i]});
    const json doc = {{"format", "finid-detection-evaluation"}, {"version", kFormatVersion}, {"images", images.size()},
                      {"ap_vol", ev.ap_vol}, {"ap", table}};
    write_atomic((fs::path(out_path) / "detection_evaluation.json").string(), doc.dump(1) + "\n");
    out << "AP^vol " << format_double(ev.ap_vol) << "\n";
    return 0;
}

int cmd_encode(const RunConfig& cfg, const std::string& contour, const std::string& role, const std::string& out_path) {
    if (role != "query" && role != "reference") throw UsageError("encode --role must be query or reference");
    const ContourFile file = load_contours(contour);
    if (file.curves.empty()) throw Error("encode: contour file has no curves");
    const FinEncoding enc = encode_fin(curve_to_fin(file.curves.front()),
                                       role == "query" ? EncodeRole::Query : EncodeRole::Reference, cfg.encode);
    json descs = json::array();
    for (const auto& d : enc.descriptors) {
        descs.push_back({{"type", to_string(d.type)},
                         {"scale", d.scale_index},
                         {"sigma", d.sigma},
                         {"start_kp", d.subsection.start_kp},
                         {"end_kp", d.subsection.end_kp},
                         {"p", d.subsection.p},
                         {"direction", d.subsection.direction == Direction::Forward ? "forward" : "reverse"},
                         {"values", d.values}});
    }
    const json doc = {{"format", "finid-descriptors"},
                      {"version", kFormatVersion},
                      {"keypoints", enc.subsections.keypoints},
                      {"tip_fraction", enc.subsections.tip_fraction},
                      {"degenerate", enc.degenerate},
                      {"descriptors", descs}};
    write_atomic(out_path, doc.dump() + "\n");
    return 0;
}

int cmd_index(const RunConfig& cfg, const std::string& manifest, const std::string& out_path, std::ostream& out) {
    const Dataset ds = load_dataset(manifest);
    std::vector<std::pair<FinContour, std::string>> refs;
    for (const auto& e : ds.entries) {
        if (e.reference) refs.emplace_back(e.fin, e.label);
    }
    const IdentityIndex index = build_index(refs, cfg.encode, cfg.index);
    save_index(out_path, index);
    out << "indexed " << index.references().size() << " descriptors of " << index.classes().size() << " classes\n";
    return 0;
}

int cmd_identify(const RunConfig& cfg, const std::string& config_path, const std::string& index_path,
                 const std::string& query, const std::string& model_path, const std::string& out_path, std::ostream& out) {
    const IdentityIndex index = load_index(index_path);
    check_index_config(index, config_path);
    const ContourFile file = load_contours(query);
    if (file.curves.empty()) throw Error("identify: query file has no curves");
    const FinContour fin = curve_to_fin(file.curves.front());
    RankedResult result;
    if (model_path.empty()) {
        result = classify_query(fin, index, classify_options(cfg));
    } else {
        const StoredModel model = load_model(model_path);
        result = rank_identities(fin, index, checked_space(index, model, config_path), model.forest);
    }
    const std::string csv = ranking_csv(result, index.classes());
    if (out_path.empty()) {
        out << csv;
    } else {
        write_atomic(out_path, csv);
    }
    return 0;
}

int cmd_finspace_train(const RunConfig& cfg, const std::string& manifest, const std::string& out_path,
                       const std::string& report_dir, std::ostream& out) {
    const Dataset ds = load_dataset(manifest);
    std::vector<LabelledFin> fins;
    for (const auto& e : ds.entries) fins.push_back({e.fin, e.label, e.reference});
    ReliabilityConfig rc;
    rc.forest = cfg.reliability_forest;
    rc.negatives_per_query = cfg.negatives_per_query;
    rc.seed = cfg.fold_seed;
    const FinSpaceConfig space = finspace_config(cfg);
    if (!(space == default_finspace_config(cfg.encode))) {
        throw Error("finspace-train: custom scale-bin edges are only supported at ranking time");
    }
    const ReliabilityTraining tr = train_reliability_model(fins, cfg.encode, cfg.index, rc);
    save_model(out_path, {tr.model, tr.finspace});
    if (!report_dir.empty()) {
        std::vector<ScoringVector> vectors;
        std::vector<char> positive;
        for (const auto& fold : tr.folds) {
            vectors.insert(vectors.end(), fold.vectors.begin(), fold.vectors.end());
            positive.insert(positive.end(), fold.positive.begin(), fold.positive.end());
        }
        write_atomic((fs::path(report_dir) / "per_bin_ap.csv").string(), per_bin_csv(per_bin_ap(vectors, positive)));
        json folds = json::array();
        for (const auto& f : tr.folds) folds.push_back(f.individuals);
        const json doc = {{"format", "finid-crossvalidation"},
                          {"version", kFormatVersion},
                          {"folds", folds},
                          {"finspace_ap", tr.model_eval.ap},
                          {"finspace_map", tr.model_eval.map},
                          {"dogn_ap", tr.dogn_eval.ap},
                          {"dogn_map", tr.dogn_eval.map},
                          {"normal_ap", tr.normal_eval.ap},
                          {"normal_map", tr.normal_eval.map}};
        write_atomic((fs::path(report_dir) / "crossvalidation.json").string(), doc.dump(1) + "\n");
    }
    out << "held-out AP finspace " << format_double(tr.model_eval.ap) << " dogn " << format_double(tr.dogn_eval.ap)
        << " normal " << format_double(tr.normal_eval.ap) << "\n";
    return 0;
}

int cmd_evaluate(const RunConfig& cfg, const std::string& config_path, const std::string& index_path,
                 const std::string& manifest, const std::string& model_path, const std::string& out_path,
                 std::ostream& out) {
    const IdentityIndex index = load_index(index_path);
    check_index_config(index, config_path);
    const Dataset ds = load_dataset(manifest);
    std::optional<StoredModel> model;
    std::optional<FinSpace> space;
    if (!model_path.empty()) {
        model = load_model(model_path);
        space.emplace(checked_space(index, *model, config_path));
    }
    std::vector<QueryOutcome> outcomes;
    for (const auto& e : ds.entries) {
        if (e.reference) continue;
        const int truth = index.class_id(e.label);
        if (truth < 0) throw Error("evaluate: query '" + e.name + "' has no class in the index");
        RankedResult r = model ? rank_identities(e.fin, index, *space, model->forest)
                               : classify_query(e.fin, index, classify_options(cfg));
        outcomes.push_back({std::move(r), truth});
    }
    if (outcomes.empty()) throw Error("evaluate: manifest has no queries");
    const auto ev = evaluate_identification(outcomes);
    write_atomic(out_path, evaluation_json(model ? "finspace" : "lnbnn", ev, outcomes.size(), index.classes()).dump(1) + "\n");
    out << "AP " << format_double(ev.ap) << " mAP " << format_double(ev.map) << "\n";
    return 0;
}

int cmd_report(const std::vector<std::string>& evaluations, const std::string& out_dir, std::ostream& out) {
    std::string table = "method,queries,ap,map,top1\n";
    for (const auto& path : evaluations) {
        const json doc = json::parse(read_file(path));
        if (doc.value("format", "") != "finid-evaluation") throw Error(path + ": not an evaluation file");
        const std::string method = doc.at("method").get<std::string>();
        table += method + "," + std::to_string(doc.at("queries").get<std::size_t>()) + "," +
                 format_double(doc.at("ap").get<double>()) + "," + format_double(doc.at("map").get<double>()) + "," +
                 format_double(doc.at("top1").get<double>()) + "\n";
        PrCurve curve;
        for (const auto& p : doc.at("pr")) curve.points.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
        write_atomic((fs::path(out_dir) / ("pr_" + fs::path(path).stem().string() + ".csv")).string(), pr_curve_csv(curve));
        std::string per = "individual,ap\n";
        for (const auto& [name, ap] : doc.at("per_individual").items()) per += name + "," + format_double(ap.get<double>()) + "\n";
        write_atomic((fs::path(out_dir) / ("individuals_" + fs::path(path).stem().string() + ".csv")).string(), per);
    }
    write_atomic((fs::path(out_dir) / "ap_table.csv").string(), table);
    out << table;
    return 0;
}

void write_error(std::ostream& err, const std::string& kind, const std::string& message, std::optional<std::size_t> byte) {
    json e = {{"kind", kind}, {"message", message}};
    if (byte) e["byte"] = *byte;
    err << json{{"format", "finid-error"}, {"version", kFormatVersion}, {"error", e}}.dump() << "\n";
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Fin contour detection and identification"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path;
    app.add_option("--config", config_path, "Run configuration (flat JSON)");

    std::string out_path, manifest, pool, model_path, index_path, query, role = "query", report_dir;
    std::size_t individuals = 0, per = 0;
    std::uint64_t seed = 0;
    bool train = false;
    std::vector<std::string> evaluations;

    auto* synth = app.add_subcommand("synth", "Generate a synthetic fin dataset");
    synth->add_option("--individuals", individuals);
    synth->add_option("--per", per, "Observations per individual, the first one is the reference");
    synth->add_option("--seed", seed);
    synth->add_option("--out", out_path)->required();

    auto* detect = app.add_subcommand("detect", "Train the stroke quality model or detect fin strokes");
    detect->add_option("--manifest", manifest);
    detect->add_option("--pool", pool);
    detect->add_option("--model", model_path);
    detect->add_flag("--train", train);
    detect->add_option("--out", out_path);

    auto* encode = app.add_subcommand("encode", "Encode one fin contour");
    encode->add_option("--contour", query)->required();
    encode->add_option("--role", role);
    encode->add_option("--out", out_path)->required();

    auto* index = app.add_subcommand("index", "Build the reference descriptor index");
    index->add_option("--manifest", manifest)->required();
    index->add_option("--out", out_path)->required();

    auto* identify = app.add_subcommand("identify", "Rank identities for one query");
    identify->add_option("--index", index_path)->required();
    identify->add_option("--query", query)->required();
    identify->add_option("--model", model_path);
    identify->add_option("--out", out_path);

    auto* fstrain = app.add_subcommand("finspace-train", "Cross-validate and train the reliability model");
    fstrain->add_option("--manifest", manifest)->required();
    fstrain->add_option("--out", out_path)->required();
    fstrain->add_option("--report", report_dir);

    auto* evaluate = app.add_subcommand("evaluate", "Identify every query of a dataset and score the rankings");
    evaluate->add_option("--index", index_path)->required();
    evaluate->add_option("--manifest", manifest)->required();
    evaluate->add_option("--model", model_path);
    evaluate->add_option("--out", out_path)->required();

    auto* report = app.add_subcommand("report", "Tabulate evaluation files");
    report->add_option("--evaluation", evaluations)->required();
    report->add_option("--out", out_path)->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        write_error(err, "usage", e.what(), std::nullopt);
        return 2;
    }

    try {
        const RunConfig cfg = config_from(config_path);
        if (*synth) {
            return cmd_synth(cfg, individuals ? individuals : cfg.synth_individuals, per ? per : cfg.synth_per_individual,
                             synth->count("--seed") ? seed : cfg.synth_seed, out_path, out);
        }
        if (*detect) return cmd_detect(cfg, manifest, pool, model_path, train, out_path, out);
        if (*encode) return cmd_encode(cfg, query, role, out_path);
        if (*index) return cmd_index(cfg, manifest, out_path, out);
        if (*identify) return cmd_identify(cfg, config_path, index_path, query, model_path, out_path, out);
        if (*fstrain) return cmd_finspace_train(cfg, manifest, out_path, report_dir, out);
        if (*evaluate) return cmd_evaluate(cfg, config_path, index_path, manifest, model_path, out_path, out);
        if (*report) return cmd_report(evaluations, out_path, out);
    } catch (const UsageError& e) {
        write_error(err, "usage", e.what(), std::nullopt);
        return 2;
    } catch (const ParseError& e) {
        write_error(err, "parse", e.what(), e.byte());
        return 1;
    } catch (const json::parse_error& e) {
        write_error(err, "parse", e.what(), e.byte);
        return 1;
    } catch (const std::exception& e) {
        write_error(err, "error", e.what(), std::nullopt);
        return 1;
    }
    return 2;
}

}  // namespace finid::cli
