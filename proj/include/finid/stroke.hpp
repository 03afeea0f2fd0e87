/**
 * @file stroke.hpp
 * @brief Fin detection over pools of closed region contours: region
 *        rejection, open-contour stroke generation, the boundary-normal
 *        histogram, quality regression with stroke NMS, and detection AP.
 */
#pragma once

#include <finid/curve.hpp>
#include <finid/forest.hpp>
#include <finid/raster.hpp>

#include <memory>
#include <optional>
#include <vector>

namespace finid {

struct RegionContour {
    PlanarCurve boundary;
    /// Lower values appear earlier in the segmentation hierarchy.
    int hierarchy_rank = 0;
    int id = 0;
};

enum class Direction { Forward, Reverse };

struct Stroke {
    int parent = 0;
    /// Keypoint sample indices on the parent boundary resampled for detection.
    std::size_t start_kp = 0;
    std::size_t end_kp = 0;
    Direction direction = Direction::Forward;
    PlanarCurve points;
};

struct StrokeScore {
    std::optional<double> f_true;
    double f_pred = 0.0;
};

struct ScoredStroke {
    Stroke stroke;
    StrokeScore score;
};

struct DetectionParams {
    std::size_t regions = 12;
    std::size_t keypoints = 7;
    ScaleSpaceParams scale{1.0, 4.0, 128};
    double min_boundary_length = 70.0;
    double cluster_overlap = 0.95;
    double nms_overlap = 0.2;
    double tolerance = 2.0;
};

/**
 * @brief Region rejection and ranking.
 *
 * Drops boundaries shorter than @p min_length, clusters the rest so that all
 * members of a cluster overlap (IoU) by at least @p cluster_overlap, keeps the
 * best-ranked member of each cluster and returns the @p k best-ranked
 * survivors.
 */
std::vector<RegionContour> filter_regions(const std::vector<RegionContour>& pool, std::size_t k = 12,
                                          double min_length = 70.0, double cluster_overlap = 0.95);

struct StrokePool {
    std::vector<Stroke> strokes;
    /// Keypoints actually used per region, min(n, peaks found).
    std::vector<std::size_t> keypoints_per_region;
};

/// One stroke per ordered keypoint pair of every region, traversed along the boundary.
StrokePool generate_stroke_pool(const std::vector<RegionContour>& regions, std::size_t n,
                                const ScaleSpaceParams& params = {1.0, 4.0, 128});

inline constexpr std::size_t kNormalSpatialBins = 20;
inline constexpr std::size_t kNormalOrientationBins = 8;

/// 20 spatial x 8 orientation histogram of left-hand boundary normals, L2-normalized.
std::vector<double> normal_histogram(const PlanarCurve& stroke);

/// Optional image-appearance component of the stroke feature.
class AppearanceFeature {
public:
    virtual ~AppearanceFeature() = default;
    virtual std::size_t dimension() const = 0;
    /// Must not depend on the traversal direction.
    virtual std::vector<double> compute(const Stroke& stroke) const = 0;
};

/// Concatenation of the normal histogram and, when set, an L2-normalized appearance component.
class StrokeFeatures {
public:
    StrokeFeatures() = default;
    explicit StrokeFeatures(std::shared_ptr<const AppearanceFeature> appearance)
        : appearance_(std::move(appearance)) {}

    std::size_t dimension() const;
    std::vector<double> operator()(const Stroke& stroke, Direction direction) const;

private:
    std::shared_ptr<const AppearanceFeature> appearance_;
};

/// Predicted quality: the larger of the two traversal directions, clamped to [0, 1].
double predict_quality(const Stroke& stroke, const Forest& model, const StrokeFeatures& features = {});

/// Strokes kept greedily by descending predicted quality; a stroke is dropped
/// when its boundary F-measure with an already kept stroke exceeds @p overlap.
std::vector<ScoredStroke> score_and_nms(const std::vector<Stroke>& strokes, const Forest& model,
                                        double overlap = 0.2, const StrokeFeatures& features = {},
                                        double tolerance = 2.0);

/// Greedy suppression on precomputed scores; returns kept indices in score order.
std::vector<std::size_t> stroke_nms(const std::vector<Stroke>& strokes, const std::vector<double>& scores,
                                    double overlap, double tolerance);

/// One labelled training image: its region pool and the fin contour (leading edge first).
struct DetectionImage {
    std::vector<RegionContour> regions;
    PlanarCurve truth;
};

/// Stroke pool of one image after region filtering.
StrokePool image_strokes(const DetectionImage& image, const DetectionParams& params);

/**
 * @brief Train the quality regressor.
 *
 * Each stroke contributes the feature of the traversal direction whose start
 * lies closer to the start of the ground-truth fin, with its boundary
 * F-measure against that fin as the target.
 */
Forest train_quality_model(const std::vector<DetectionImage>& images, const DetectionParams& params,
                           const TrainConfig& config, const StrokeFeatures& features = {});

struct Detection {
    std::size_t image = 0;
    double f_pred = 0.0;
    /// Ground-truth quality against each truth of the image.
    std::vector<double> truth_quality;
};

struct DetectionEvaluation {
    std::vector<double> thresholds;
    std::vector<double> ap;
    double ap_vol = 0.0;
    bool empty = false;
};

/**
 * @brief Detection AP at quality threshold @p t, detections pooled over images.
 *
 * Detections are visited by descending f_pred. Each becomes a true positive
 * when an unmatched truth of its image has quality >= t, claiming the
 * highest-quality such truth. AP is the sum of precision at each true
 * positive divided by the number of truths.
 */
double detection_ap(const std::vector<Detection>& detections, const std::vector<std::size_t>& truths_per_image,
                    double t);

/// Midpoint grid (i + 0.5) / count, i = 0..count-1.
std::vector<double> quality_grid(std::size_t count = 20);

/// AP at each threshold; AP^vol is their mean over quality_grid().
DetectionEvaluation evaluate_detection(const std::vector<Detection>& detections,
                                       const std::vector<std::size_t>& truths_per_image,
                                       const std::vector<double>& thresholds,
                                       std::size_t volume_grid = 20);

}  // namespace finid
