#include <finid/config.hpp>
#include <finid/io.hpp>

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

namespace finid {

using nlohmann::json;

namespace {

struct Field {
    std::string key;
    std::function<json(const RunConfig&)> get;
    std::function<void(RunConfig&, const json&)> set;
};

template <typename T>
T convert(const std::string& key, const json& v);

template <>
double convert<double>(const std::string& key, const json& v) {
    if (!v.is_number()) throw Error("config: '" + key + "' must be a number");
    return v.get<double>();
}

template <>
std::size_t convert<std::size_t>(const std::string& key, const json& v) {
    if (!v.is_number_unsigned()) throw Error("config: '" + key + "' must be a non-negative integer");
    return v.get<std::size_t>();
}

static_assert(std::is_same_v<std::uint64_t, std::size_t>);

template <>
bool convert<bool>(const std::string& key, const json& v) {
    if (!v.is_boolean()) throw Error("config: '" + key + "' must be a boolean");
    return v.get<bool>();
}

template <>
std::vector<double> convert<std::vector<double>>(const std::string& key, const json& v) {
    if (!v.is_array()) throw Error("config: '" + key + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) out.push_back(convert<double>(key, x));
    return out;
}

template <typename T, typename Access>
Field bind(std::string key, Access access) {
    return Field{key,
                 [access](const RunConfig& c) { return json(access(const_cast<RunConfig&>(c))); },
                 [access, key](RunConfig& c, const json& v) { access(c) = convert<T>(key, v); }};
}

void add_forest(std::vector<Field>& f, const std::string& prefix, TrainConfig RunConfig::*member) {
    f.push_back(bind<std::size_t>(prefix + ".n_trees", [member](RunConfig& c) -> auto& { return (c.*member).n_trees; }));
    f.push_back(bind<std::size_t>(prefix + ".max_depth", [member](RunConfig& c) -> auto& { return (c.*member).max_depth; }));
    f.push_back(bind<std::size_t>(prefix + ".min_leaf", [member](RunConfig& c) -> auto& { return (c.*member).min_leaf; }));
    f.push_back(bind<std::size_t>(prefix + ".features_per_split",
                                  [member](RunConfig& c) -> auto& { return (c.*member).features_per_split; }));
    f.push_back(bind<std::uint64_t>(prefix + ".seed", [member](RunConfig& c) -> auto& { return (c.*member).seed; }));
    f.push_back(bind<bool>(prefix + ".bootstrap", [member](RunConfig& c) -> auto& { return (c.*member).bootstrap; }));
}

const char* family_name(FamilySelection f) {
    switch (f) {
        case FamilySelection::DogN: return "dogn";
        case FamilySelection::Normal: return "normal";
        case FamilySelection::Both: return "both";
    }
    return "dogn";
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = [] {
        std::vector<Field> f;
        f.push_back(bind<std::size_t>("detect.regions", [](RunConfig& c) -> auto& { return c.detect.regions; }));
        f.push_back(bind<std::size_t>("detect.keypoints", [](RunConfig& c) -> auto& { return c.detect.keypoints; }));
        f.push_back(bind<double>("detect.sigma", [](RunConfig& c) -> auto& { return c.detect.scale.sigma; }));
        f.push_back(bind<double>("detect.m", [](RunConfig& c) -> auto& { return c.detect.scale.m; }));
        f.push_back(bind<std::size_t>("detect.resample_len", [](RunConfig& c) -> auto& { return c.detect.scale.resample_len; }));
        f.push_back(bind<double>("detect.min_boundary_length", [](RunConfig& c) -> auto& { return c.detect.min_boundary_length; }));
        f.push_back(bind<double>("detect.cluster_overlap", [](RunConfig& c) -> auto& { return c.detect.cluster_overlap; }));
        f.push_back(bind<double>("detect.nms_overlap", [](RunConfig& c) -> auto& { return c.detect.nms_overlap; }));
        f.push_back(bind<double>("detect.tolerance", [](RunConfig& c) -> auto& { return c.detect.tolerance; }));
        f.push_back(bind<std::size_t>("detect.volume_grid", [](RunConfig& c) -> auto& { return c.detect_volume_grid; }));
        add_forest(f, "detect.forest", &RunConfig::quality_forest);

        f.push_back(bind<std::size_t>("encode.contour_len", [](RunConfig& c) -> auto& { return c.encode.contour_len; }));
        f.push_back(bind<double>("encode.keypoint_sigma", [](RunConfig& c) -> auto& { return c.encode.keypoint_sigma; }));
        f.push_back(bind<double>("encode.keypoint_m", [](RunConfig& c) -> auto& { return c.encode.keypoint_m; }));
        f.push_back(bind<std::size_t>("encode.interior_keypoints",
                                      [](RunConfig& c) -> auto& { return c.encode.interior_keypoints; }));
        f.push_back(bind<std::size_t>("encode.descriptor_len", [](RunConfig& c) -> auto& { return c.encode.descriptor_len; }));
        f.push_back(bind<double>("encode.descriptor_m", [](RunConfig& c) -> auto& { return c.encode.descriptor_m; }));
        f.push_back(bind<std::vector<double>>("encode.scales", [](RunConfig& c) -> auto& { return c.encode.scales; }));
        f.push_back(bind<double>("encode.degenerate_energy", [](RunConfig& c) -> auto& { return c.encode.degenerate_energy; }));

        f.push_back(bind<bool>("index.exact_mode", [](RunConfig& c) -> auto& { return c.index.exact_mode; }));
        f.push_back(bind<std::size_t>("index.trees", [](RunConfig& c) -> auto& { return c.index.trees; }));
        f.push_back(bind<std::size_t>("index.checks", [](RunConfig& c) -> auto& { return c.index.checks; }));
        f.push_back(bind<std::size_t>("index.knn", [](RunConfig& c) -> auto& { return c.index.knn; }));
        f.push_back(bind<std::uint64_t>("index.seed", [](RunConfig& c) -> auto& { return c.index.seed; }));

        f.push_back(Field{"identify.families", [](const RunConfig& c) { return json(family_name(c.families)); },
                          [](RunConfig& c, const json& v) {
                              const std::string s = v.is_string() ? v.get<std::string>() : "";
                              if (s == "dogn") c.families = FamilySelection::DogN;
                              else if (s == "normal") c.families = FamilySelection::Normal;
                              else if (s == "both") c.families = FamilySelection::Both;
                              else throw Error("config: 'identify.families' must be \"dogn\", \"normal\" or \"both\"");
                          }});
        f.push_back(bind<std::vector<double>>("identify.scale_weights", [](RunConfig& c) -> auto& { return c.scale_weights; }));

        add_forest(f, "finspace.forest", &RunConfig::reliability_forest);
        f.push_back(bind<std::size_t>("finspace.negatives_per_query",
                                      [](RunConfig& c) -> auto& { return c.negatives_per_query; }));
        f.push_back(bind<std::uint64_t>("finspace.fold_seed", [](RunConfig& c) -> auto& { return c.fold_seed; }));
        f.push_back(bind<std::vector<double>>("finspace.scale_bin_edges", [](RunConfig& c) -> auto& { return c.scale_bin_edges; }));

        f.push_back(bind<std::size_t>("synth.individuals", [](RunConfig& c) -> auto& { return c.synth_individuals; }));
        f.push_back(bind<std::size_t>("synth.per_individual", [](RunConfig& c) -> auto& { return c.synth_per_individual; }));
        f.push_back(bind<std::uint64_t>("synth.seed", [](RunConfig& c) -> auto& { return c.synth_seed; }));
        f.push_back(bind<std::size_t>("synth.min_jags", [](RunConfig& c) -> auto& { return c.population.min_jags; }));
        f.push_back(bind<std::size_t>("synth.max_jags", [](RunConfig& c) -> auto& { return c.population.max_jags; }));
        f.push_back(bind<double>("synth.min_separation", [](RunConfig& c) -> auto& { return c.population.min_separation; }));
        f.push_back(bind<double>("synth.max_rotation", [](RunConfig& c) -> auto& { return c.perturbation.max_rotation; }));
        f.push_back(bind<double>("synth.min_scale", [](RunConfig& c) -> auto& { return c.perturbation.min_scale; }));
        f.push_back(bind<double>("synth.max_scale", [](RunConfig& c) -> auto& { return c.perturbation.max_scale; }));
        f.push_back(bind<double>("synth.max_noise", [](RunConfig& c) -> auto& { return c.perturbation.max_noise; }));
        f.push_back(bind<double>("synth.max_occlusion", [](RunConfig& c) -> auto& { return c.perturbation.max_occlusion; }));
        return f;
    }();
    return table;
}

void validate(const RunConfig& c) {
    if (c.encode.scales.empty()) throw Error("config: 'encode.scales' must not be empty");
    if (c.encode.contour_len < 3 || c.encode.descriptor_len < 3) throw Error("config: contour lengths must be at least 3");
    if (c.detect.keypoints < 2) throw Error("config: 'detect.keypoints' must be at least 2");
    if (c.quality_forest.n_trees < 1 || c.reliability_forest.n_trees < 1) throw Error("config: forests need at least one tree");
    if (c.quality_forest.min_leaf < 1 || c.reliability_forest.min_leaf < 1) throw Error("config: min_leaf must be at least 1");
    if (!c.scale_weights.empty() && c.scale_weights.size() != c.encode.scales.size()) {
        throw Error("config: 'identify.scale_weights' needs one weight per scale");
    }
    if (!c.scale_bin_edges.empty() && c.scale_bin_edges.size() != kScaleBins + 1) {
        throw Error("config: 'finspace.scale_bin_edges' needs six edges");
    }
    if (!(c.perturbation.max_occlusion >= 0.0 && c.perturbation.max_occlusion < 0.75)) {
        throw Error("config: 'synth.max_occlusion' must lie in [0, 0.75)");
    }
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("config: ") + e.what(), e.byte);
    }
    if (!doc.is_object()) throw Error("config: top level must be an object");
    RunConfig cfg;
    for (const auto& [key, value] : doc.items()) {
        const auto& table = fields();
        const auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) { return f.key == key; });
        if (it == table.end()) throw Error("config: unknown key '" + key + "'");
        it->set(cfg, value);
    }
    validate(cfg);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("config: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string dump_config(const RunConfig& config) {
    json doc = json::object();
    for (const auto& f : fields()) doc[f.key] = f.get(config);
    return doc.dump(2) + "\n";
}

FinSpaceConfig finspace_config(const RunConfig& config) {
    FinSpaceConfig fs = default_finspace_config(config.encode);
    if (!config.scale_bin_edges.empty()) fs.scale_edges = config.scale_bin_edges;
    return fs;
}

ClassifyOptions classify_options(const RunConfig& config) {
    ClassifyOptions opt;
    opt.families = config.families;
    opt.weights = config.scale_weights;
    return opt;
}

std::uint64_t index_config_hash(const EncodeParams& params, const IndexOptions& options) {
    RunConfig c;
    c.encode = params;
    c.index = options;
    json doc = json::object();
    for (const auto& f : fields()) {
        if (f.key.rfind("encode.", 0) == 0 || f.key.rfind("index.", 0) == 0) doc[f.key] = f.get(c);
    }
    const std::string text = doc.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace finid
