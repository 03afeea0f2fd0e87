#include <finid/io.hpp>

#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace finid {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr char kIndexMagic[8] = {'F', 'I', 'N', 'I', 'D', 'X', '\0', '\0'};

json parse_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(what + ": parse error at byte " + std::to_string(e.byte) + ": " + e.what(), e.byte);
    }
}

void check_header(const json& doc, const std::string& format) {
    if (!doc.is_object() || !doc.contains("format") || doc["format"] != format) {
        throw Error("expected a '" + format + "' document");
    }
    if (!doc.contains("version") || !doc["version"].is_number_integer()) throw Error(format + ": missing version");
    const int version = doc["version"].get<int>();
    if (version != kFormatVersion) {
        throw Error(format + ": unsupported version " + std::to_string(version) + ", this build reads version " +
                    std::to_string(kFormatVersion) + " and has no migration for it");
    }
}

template <typename T>
T field(const json& obj, const char* key) {
    if (!obj.contains(key)) throw Error(std::string("missing field '") + key + "'");
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(std::string("field '") + key + "': " + e.what());
    }
}

json perturbation_json(const PerturbationConfig& p) {
    return {{"rotation", p.rotation}, {"scale", p.scale}, {"noise", p.noise}, {"occlusion", p.occlusion}, {"seed", p.seed}};
}

PerturbationConfig perturbation_from(const json& j) {
    PerturbationConfig p;
    p.rotation = field<double>(j, "rotation");
    p.scale = field<double>(j, "scale");
    p.noise = field<double>(j, "noise");
    p.occlusion = field<double>(j, "occlusion");
    p.seed = field<std::uint64_t>(j, "seed");
    return p;
}

json train_config_json(const TrainConfig& c) {
    return {{"n_trees", c.n_trees}, {"max_depth", c.max_depth}, {"min_leaf", c.min_leaf},
            {"features_per_split", c.features_per_split}, {"seed", c.seed}, {"bootstrap", c.bootstrap}};
}

TrainConfig train_config_from(const json& j) {
    TrainConfig c;
    c.n_trees = field<std::size_t>(j, "n_trees");
    c.max_depth = field<std::size_t>(j, "max_depth");
    c.min_leaf = field<std::size_t>(j, "min_leaf");
    c.features_per_split = field<std::size_t>(j, "features_per_split");
    c.seed = field<std::uint64_t>(j, "seed");
    c.bootstrap = field<bool>(j, "bootstrap");
    return c;
}

class Writer {
public:
    template <typename T>
    void put(T v) {
        char buf[sizeof(T)];
        std::memcpy(buf, &v, sizeof(T));
        out_.append(buf, sizeof(T));
    }
    void bytes(const char* p, std::size_t n) { out_.append(p, n); }
    std::string take() { return std::move(out_); }

private:
    std::string out_;
};

class Reader {
public:
    explicit Reader(const std::string& in) : in_(in) {}
    template <typename T>
    T get() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, in_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s = in_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    std::size_t pos() const { return pos_; }
    bool done() const { return pos_ == in_.size(); }

private:
    void need(std::size_t n) const {
        if (in_.size() - pos_ < n) throw ParseError("index: truncated file at byte " + std::to_string(pos_), pos_);
    }
    const std::string& in_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_atomic(const std::string& path, const std::string& bytes) {
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw Error("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) throw Error("cannot rename " + tmp.string() + " to " + path + ": " + ec.message());
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string contours_to_text(const ContourFile& file) {
    json curves = json::array();
    for (const auto& c : file.curves) {
        json pts = json::array();
        for (const auto& p : c.curve.points()) pts.push_back({p.x, p.y});
        json j = {{"name", c.name}, {"closed", c.curve.closed()}, {"points", pts}};
        if (c.tip_index) j["tip_index"] = *c.tip_index;
        if (c.label) j["label"] = *c.label;
        if (c.hierarchy_rank) j["hierarchy_rank"] = *c.hierarchy_rank;
        if (c.quality) j["quality"] = *c.quality;
        curves.push_back(std::move(j));
    }
    const json doc = {{"format", "finid-contours"}, {"version", file.version}, {"curves", curves}};
    return doc.dump(1) + "\n";
}

ContourFile contours_from_text(const std::string& text) {
    const json doc = parse_json(text, "contours");
    check_header(doc, "finid-contours");
    ContourFile file;
    file.version = doc["version"].get<int>();
    if (!doc.contains("curves") || !doc["curves"].is_array()) throw Error("contours: missing curves array");
    for (const auto& j : doc["curves"]) {
        std::vector<Point2> pts;
        const json& arr = j.at("points");
        if (!arr.is_array()) throw Error("contours: points must be an array");
        for (const auto& p : arr) {
            if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
                throw Error("contours: each point must be [x, y]");
            }
            pts.push_back({p[0].get<double>(), p[1].get<double>()});
        }
        NamedCurve c{field<std::string>(j, "name"), PlanarCurve(std::move(pts), field<bool>(j, "closed")), {}, {}, {}, {}};
        if (j.contains("tip_index")) c.tip_index = field<std::size_t>(j, "tip_index");
        if (j.contains("label")) c.label = field<std::string>(j, "label");
        if (j.contains("hierarchy_rank")) c.hierarchy_rank = field<int>(j, "hierarchy_rank");
        if (j.contains("quality")) c.quality = field<double>(j, "quality");
        file.curves.push_back(std::move(c));
    }
    return file;
}

void save_contours(const std::string& path, const ContourFile& file) {
    write_atomic(path, contours_to_text(file));
}

ContourFile load_contours(const std::string& path) {
    try {
        return contours_from_text(read_file(path));
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what(), e.byte());
    }
}

NamedCurve fin_curve(const std::string& name, const FinContour& fin, const std::optional<std::string>& label) {
    return NamedCurve{name, fin.curve, fin.tip_index, label, {}, fin.source_quality};
}

FinContour curve_to_fin(const NamedCurve& curve) {
    if (curve.curve.closed()) throw Error("contour '" + curve.name + "' is closed, expected an open fin contour");
    FinContour fin = make_fin(curve.curve, curve.quality);
    if (curve.tip_index) {
        if (*curve.tip_index == 0 || *curve.tip_index + 1 >= curve.curve.size()) {
            throw Error("contour '" + curve.name + "': tip_index must be an interior vertex");
        }
        fin.tip_index = *curve.tip_index;
    }
    return fin;
}

ContourFile region_pool_file(const DetectionImage& image) {
    ContourFile file;
    for (const auto& r : image.regions) {
        file.curves.push_back({"region" + std::to_string(r.id), r.boundary, {}, {}, r.hierarchy_rank, {}});
    }
    file.curves.push_back({"truth", image.truth, {}, {}, {}, {}});
    return file;
}

DetectionImage region_pool_from_file(const ContourFile& file) {
    DetectionImage image{{}, PlanarCurve({{0, 0}, {1, 0}}, false)};
    bool have_truth = false;
    int next_id = 0;
    for (const auto& c : file.curves) {
        if (c.name == "truth") {
            image.truth = c.curve;
            have_truth = true;
        } else {
            if (!c.curve.closed()) throw Error("region pool: region '" + c.name + "' must be closed");
            image.regions.push_back({c.curve, c.hierarchy_rank.value_or(next_id), next_id});
            ++next_id;
        }
    }
    if (!have_truth) image.truth = PlanarCurve({{0, 0}, {1, 0}}, false);
    return image;
}

void write_dataset(const std::string& dir, const Dataset& dataset) {
    json entries = json::array();
    for (const auto& e : dataset.entries) {
        const std::string file = e.name + ".contour.json";
        const std::string pool = e.name + ".pool.json";
        ContourFile cf;
        cf.curves.push_back(fin_curve(e.name, e.fin, e.label));
        save_contours((fs::path(dir) / file).string(), cf);
        save_contours((fs::path(dir) / pool).string(), region_pool_file(synthetic_region_pool(e.fin, e.perturbation.seed)));
        entries.push_back({{"name", e.name},
                           {"label", e.label},
                           {"role", e.reference ? "reference" : "query"},
                           {"file", file},
                           {"pool", pool},
                           {"perturbation", perturbation_json(e.perturbation)}});
    }
    const json doc = {{"format", "finid-manifest"}, {"version", kFormatVersion}, {"seed", dataset.seed}, {"entries", entries}};
    write_atomic((fs::path(dir) / "manifest.json").string(), doc.dump(1) + "\n");
}

Dataset load_dataset(const std::string& manifest_path) {
    json doc;
    try {
        doc = parse_json(read_file(manifest_path), "manifest");
    } catch (const ParseError& e) {
        throw ParseError(manifest_path + ": " + e.what(), e.byte());
    }
    check_header(doc, "finid-manifest");
    const fs::path dir = fs::path(manifest_path).parent_path();
    Dataset ds;
    ds.seed = field<std::uint64_t>(doc, "seed");
    for (const auto& j : doc.at("entries")) {
        const auto name = field<std::string>(j, "name");
        const auto role = field<std::string>(j, "role");
        if (role != "reference" && role != "query") throw Error("manifest: role must be reference or query");
        const ContourFile cf = load_contours((dir / field<std::string>(j, "file")).string());
        if (cf.curves.empty()) throw Error("manifest: empty contour file for " + name);
        ds.entries.push_back({name, field<std::string>(j, "label"), role == "reference",
                              perturbation_from(j.at("perturbation")), curve_to_fin(cf.curves.front())});
    }
    return ds;
}

std::string model_to_text(const StoredModel& model) {
    const Forest& f = model.forest;
    json trees = json::array();
    for (const auto& t : f.trees) {
        json nodes = json::array();
        for (const auto& n : t.nodes()) {
            nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}, {"value", n.value}});
        }
        trees.push_back(std::move(nodes));
    }
    json doc = {{"format", "finid-forest"},
                {"version", kFormatVersion},
                {"task", f.task == Task::Regression ? "regression" : "classification"},
                {"n_features", f.n_features},
                {"n_classes", f.n_classes},
                {"config", train_config_json(f.config)},
                {"trees", trees}};
    if (model.finspace) {
        doc["finspace"] = {{"partitions", kPartitions},
                           {"scale_bins", kScaleBins},
                           {"scale_edges", model.finspace->scale_edges},
                           {"descriptor_len", model.finspace->descriptor_len}};
    }
    return doc.dump() + "\n";
}

StoredModel model_from_text(const std::string& text) {
    const json doc = parse_json(text, "forest");
    check_header(doc, "finid-forest");
    StoredModel m;
    const auto task = field<std::string>(doc, "task");
    if (task != "regression" && task != "classification") throw Error("forest: unknown task " + task);
    m.forest.task = task == "regression" ? Task::Regression : Task::Classification;
    m.forest.n_features = field<std::size_t>(doc, "n_features");
    m.forest.n_classes = field<std::size_t>(doc, "n_classes");
    m.forest.config = train_config_from(doc.at("config"));
    for (const auto& t : doc.at("trees")) {
        std::vector<TreeNode> nodes;
        for (const auto& n : t) {
            nodes.push_back({field<int>(n, "feature"), field<double>(n, "threshold"), field<int>(n, "left"),
                             field<int>(n, "right"), field<std::vector<double>>(n, "value")});
        }
        m.forest.trees.emplace_back(std::move(nodes));
    }
    if (m.forest.trees.empty()) throw Error("forest: no trees");
    if (doc.contains("finspace")) {
        const json& fsj = doc["finspace"];
        if (field<std::size_t>(fsj, "partitions") != kPartitions || field<std::size_t>(fsj, "scale_bins") != kScaleBins) {
            throw Error("forest: fin-space layout does not match this build");
        }
        FinSpaceConfig fsc;
        fsc.scale_edges = field<std::vector<double>>(fsj, "scale_edges");
        fsc.descriptor_len = field<double>(fsj, "descriptor_len");
        m.finspace = fsc;
    }
    return m;
}

void save_model(const std::string& path, const StoredModel& model) {
    write_atomic(path, model_to_text(model));
}

StoredModel load_model(const std::string& path) {
    try {
        return model_from_text(read_file(path));
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what(), e.byte());
    }
}

std::string index_to_bytes(const IdentityIndex& index) {
    RunConfig rc;
    rc.encode = index.params();
    rc.index = index.options();
    const json all = json::parse(dump_config(rc));
    json settings = json::object();
    for (const auto& [k, v] : all.items()) {
        if (k.rfind("encode.", 0) == 0 || k.rfind("index.", 0) == 0) settings[k] = v;
    }
    const json header = {{"settings", settings},
                         {"classes", index.classes()},
                         {"fin_count", index.fin_count()},
                         {"references", index.references().size()}};
    const std::string head = header.dump();

    Writer w;
    w.bytes(kIndexMagic, sizeof kIndexMagic);
    w.put<std::uint32_t>(kFormatVersion);
    w.put<std::uint64_t>(index_config_hash(index.params(), index.options()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(head.size()));
    w.bytes(head.data(), head.size());

    std::vector<std::size_t> row_of(index.references().size());
    for (std::size_t t = 0; t < kDescriptorTypes; ++t) {
        for (std::size_t s = 0; s < index.scale_count(); ++s) {
            const SubIndex& sub = index.sub_index(static_cast<DescriptorType>(t), s);
            for (std::size_t r = 0; r < sub.size(); ++r) row_of[sub.reference_ids[r]] = r;
        }
    }
    for (std::size_t id = 0; id < index.references().size(); ++id) {
        const ReferenceMeta& m = index.references()[id];
        w.put<std::int32_t>(m.class_id);
        w.put<std::uint64_t>(m.fin);
        w.put<std::uint8_t>(static_cast<std::uint8_t>(m.type));
        w.put<std::uint32_t>(static_cast<std::uint32_t>(m.scale_index));
        w.put<double>(m.sigma);
        w.put<std::uint32_t>(static_cast<std::uint32_t>(m.subsection.start_kp));
        w.put<std::uint32_t>(static_cast<std::uint32_t>(m.subsection.end_kp));
        w.put<double>(m.subsection.p);
        w.put<std::uint8_t>(m.subsection.direction == Direction::Forward ? 0 : 1);
        w.put<double>(m.start_fraction);
        w.put<double>(m.end_fraction);
        w.put<double>(m.tip_fraction);
        const SubIndex& sub = index.sub_index(m.type, m.scale_index);
        w.bytes(reinterpret_cast<const char*>(sub.row(row_of[id])), sub.dim * sizeof(float));
    }
    return w.take();
}

IdentityIndex index_from_bytes(const std::string& bytes) {
    Reader r(bytes);
    if (r.bytes(sizeof kIndexMagic) != std::string(kIndexMagic, sizeof kIndexMagic)) {
        throw ParseError("index: bad magic at byte 0", 0);
    }
    const auto version = r.get<std::uint32_t>();
    if (version != kFormatVersion) {
        throw Error("index: unsupported version " + std::to_string(version) + ", this build reads version " +
                    std::to_string(kFormatVersion) + " and has no migration for it");
    }
    const auto hash = r.get<std::uint64_t>();
    const auto head_len = r.get<std::uint32_t>();
    const std::size_t head_at = r.pos();
    json header;
    try {
        header = json::parse(r.bytes(head_len));
    } catch (const json::parse_error& e) {
        throw ParseError("index: header parse error at byte " + std::to_string(head_at + e.byte), head_at + e.byte);
    }
    const RunConfig rc = parse_config(header.at("settings").dump());
    if (index_config_hash(rc.encode, rc.index) != hash) throw Error("index: configuration hash mismatch");

    IdentityIndex index(rc.encode, rc.index);
    index.restore(field<std::vector<std::string>>(header, "classes"), field<std::size_t>(header, "fin_count"));
    const auto count = field<std::size_t>(header, "references");
    std::vector<float> values;
    for (std::size_t id = 0; id < count; ++id) {
        ReferenceMeta m;
        m.class_id = r.get<std::int32_t>();
        m.fin = r.get<std::uint64_t>();
        const auto type = r.get<std::uint8_t>();
        if (type >= kDescriptorTypes) throw ParseError("index: bad descriptor type at byte " + std::to_string(r.pos() - 1), r.pos() - 1);
        m.type = static_cast<DescriptorType>(type);
        m.scale_index = r.get<std::uint32_t>();
        m.sigma = r.get<double>();
        m.subsection.start_kp = r.get<std::uint32_t>();
        m.subsection.end_kp = r.get<std::uint32_t>();
        m.subsection.p = r.get<double>();
        m.subsection.direction = r.get<std::uint8_t>() == 0 ? Direction::Forward : Direction::Reverse;
        m.start_fraction = r.get<double>();
        m.end_fraction = r.get<double>();
        m.tip_fraction = r.get<double>();
        const std::size_t dim = index.sub_index(m.type, m.scale_index).dim;
        values.resize(dim);
        const std::string raw = r.bytes(dim * sizeof(float));
        std::memcpy(values.data(), raw.data(), raw.size());
        index.restore_reference(m, values);
    }
    if (!r.done()) throw ParseError("index: trailing bytes at byte " + std::to_string(r.pos()), r.pos());
    index.finalize();
    return index;
}

void save_index(const std::string& path, const IdentityIndex& index) {
    write_atomic(path, index_to_bytes(index));
}

IdentityIndex load_index(const std::string& path) {
    try {
        return index_from_bytes(read_file(path));
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what(), e.byte());
    }
}

std::string ranking_csv(const RankedResult& result, const std::vector<std::string>& classes) {
    std::string out = "rank,class,score\n";
    std::size_t rank = 1;
    for (const auto& [c, s] : result.ranking) {
        out += std::to_string(rank++) + "," + classes.at(static_cast<std::size_t>(c)) + "," + format_double(s) + "\n";
    }
    return out;
}

std::string pr_curve_csv(const PrCurve& curve) {
    std::string out = "threshold,recall,precision\n";
    for (const auto& p : curve.points) {
        out += format_double(p.threshold) + "," + format_double(p.recall) + "," + format_double(p.precision) + "\n";
    }
    return out;
}

std::string per_bin_csv(const std::vector<double>& ap) {
    if (ap.size() != kFinSpaceDim) throw Error("per_bin_csv: expected one AP per fin-space bin");
    std::string out = "dtype,first_partition,last_partition,scale_bin,ap\n";
    for (std::size_t b = 0; b < kFinSpaceDim; ++b) {
        const auto c = coordinate_from_flat(b);
        const auto iv = spatial_interval(c.spatial_bin);
        out += std::string(to_string(c.type)) + "," + std::to_string(iv.first) + "," + std::to_string(iv.last) + "," +
               std::to_string(c.scale_bin) + "," + format_double(ap[b]) + "\n";
    }
    return out;
}

}  // namespace finid
