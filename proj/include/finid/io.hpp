/**
 * @file io.hpp
 * @brief Persistent formats: contour files, dataset manifests, forests,
 *        the binary descriptor index and report files.
 */
#pragma once

#include <finid/config.hpp>
#include <finid/finspace.hpp>
#include <finid/forest.hpp>
#include <finid/lnbnn.hpp>
#include <finid/synth.hpp>

#include <optional>
#include <string>
#include <vector>

namespace finid {

inline constexpr int kFormatVersion = 1;

/// Malformed input; byte is the offset reported by the parser.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t byte) : Error(what), byte_(byte) {}
    std::size_t byte() const { return byte_; }

private:
    std::size_t byte_;
};

/// Writes to a temporary file in the same directory, then renames it over @p path.
void write_atomic(const std::string& path, const std::string& bytes);
std::string read_file(const std::string& path);

struct NamedCurve {
    std::string name;
    PlanarCurve curve;
    std::optional<std::size_t> tip_index;
    std::optional<std::string> label;
    std::optional<int> hierarchy_rank;
    std::optional<double> quality;

    friend bool operator==(const NamedCurve&, const NamedCurve&) = default;
};

struct ContourFile {
    int version = kFormatVersion;
    std::vector<NamedCurve> curves;

    friend bool operator==(const ContourFile&, const ContourFile&) = default;
};

std::string contours_to_text(const ContourFile& file);
ContourFile contours_from_text(const std::string& text);
void save_contours(const std::string& path, const ContourFile& file);
ContourFile load_contours(const std::string& path);

NamedCurve fin_curve(const std::string& name, const FinContour& fin, const std::optional<std::string>& label = {});
/// First curve of the file as a fin; the tip is located when absent.
FinContour curve_to_fin(const NamedCurve& curve);

ContourFile region_pool_file(const DetectionImage& image);
DetectionImage region_pool_from_file(const ContourFile& file);

/// Writes manifest.json plus one contour file (and region pool file) per entry.
void write_dataset(const std::string& dir, const Dataset& dataset);
Dataset load_dataset(const std::string& manifest_path);

struct StoredModel {
    Forest forest;
    std::optional<FinSpaceConfig> finspace;
};

std::string model_to_text(const StoredModel& model);
StoredModel model_from_text(const std::string& text);
void save_model(const std::string& path, const StoredModel& model);
StoredModel load_model(const std::string& path);

std::string index_to_bytes(const IdentityIndex& index);
IdentityIndex index_from_bytes(const std::string& bytes);
void save_index(const std::string& path, const IdentityIndex& index);
IdentityIndex load_index(const std::string& path);

/// CSV with header rank,class,score.
std::string ranking_csv(const RankedResult& result, const std::vector<std::string>& classes);
/// CSV with header threshold,recall,precision.
std::string pr_curve_csv(const PrCurve& curve);
/// CSV with header dtype,first_partition,last_partition,scale_bin,ap.
std::string per_bin_csv(const std::vector<double>& ap);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

}  // namespace finid
