#include <finid/stroke.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace finid {

namespace {

void l2_normalize(std::vector<double>& v) {
    double sq = 0.0;
    for (double x : v) sq += x * x;
    if (sq <= 0.0) return;
    const double inv = 1.0 / std::sqrt(sq);
    for (auto& x : v) x *= inv;
}

}  // namespace

std::vector<RegionContour> filter_regions(const std::vector<RegionContour>& pool, std::size_t k,
                                          double min_length, double cluster_overlap) {
    if (pool.empty()) throw Error("filter_regions: empty region pool");
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (pool[i].hierarchy_rank < 0) throw Error("filter_regions: negative hierarchy rank");
        if (pool[i].boundary.length() >= min_length) order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return pool[a].hierarchy_rank < pool[b].hierarchy_rank;
    });

    std::vector<RegionMask> masks;
    masks.reserve(order.size());
    for (std::size_t i : order) masks.emplace_back(pool[i].boundary);

    // Complete linkage: a region joins the first cluster it overlaps entirely.
    std::vector<std::vector<std::size_t>> clusters;
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        bool placed = false;
        for (auto& members : clusters) {
            const bool fits = std::all_of(members.begin(), members.end(), [&](std::size_t other) {
                return masks[pos].overlap(masks[other]) >= cluster_overlap;
            });
            if (fits) {
                members.push_back(pos);
                placed = true;
                break;
            }
        }
        if (!placed) clusters.push_back({pos});
    }

    std::vector<RegionContour> kept;
    for (const auto& members : clusters) {
        kept.push_back(pool[order[members.front()]]);
        if (kept.size() == k) break;
    }
    return kept;
}

StrokePool generate_stroke_pool(const std::vector<RegionContour>& regions, std::size_t n,
                                const ScaleSpaceParams& params) {
    StrokePool pool;
    for (const auto& region : regions) {
        auto kps = detect_keypoints(region.boundary, n, params);
        std::sort(kps.begin(), kps.end(), [](const Keypoint& a, const Keypoint& b) { return a.index < b.index; });
        pool.keypoints_per_region.push_back(kps.size());
        const double step = region.boundary.length() / static_cast<double>(params.resample_len);
        for (const auto& from : kps) {
            for (const auto& to : kps) {
                if (from.index == to.index) continue;
                Stroke s{region.id, from.index, to.index, Direction::Forward,
                         extract_arc(region.boundary, step * static_cast<double>(from.index),
                                     step * static_cast<double>(to.index))};
                pool.strokes.push_back(std::move(s));
            }
        }
    }
    return pool;
}

std::vector<double> normal_histogram(const PlanarCurve& stroke) {
    constexpr std::size_t kSegments = 160;
    const PlanarCurve sampled = resample(stroke, kSegments + 1);
    std::vector<double> hist(kNormalSpatialBins * kNormalOrientationBins, 0.0);
    const double bin_width = std::numbers::pi / 4.0;
    for (std::size_t k = 0; k < kSegments; ++k) {
        const Point2 t = sampled[k + 1] - sampled[k];
        double angle = std::atan2(t.x, -t.y);  // normal (-ty, tx)
        if (angle < 0.0) angle += 2.0 * std::numbers::pi;
        auto orient = static_cast<std::size_t>(std::floor(angle / bin_width + 1e-9)) % kNormalOrientationBins;
        const std::size_t spatial = k * kNormalSpatialBins / kSegments;
        hist[spatial * kNormalOrientationBins + orient] += 1.0;
    }
    l2_normalize(hist);
    return hist;
}

std::size_t StrokeFeatures::dimension() const {
    return kNormalSpatialBins * kNormalOrientationBins + (appearance_ ? appearance_->dimension() : 0);
}

std::vector<double> StrokeFeatures::operator()(const Stroke& stroke, Direction direction) const {
    auto feature = normal_histogram(direction == Direction::Forward ? stroke.points : stroke.points.reversed());
    if (appearance_) {
        auto extra = appearance_->compute(stroke);
        if (extra.size() != appearance_->dimension()) throw Error("StrokeFeatures: appearance dimension mismatch");
        l2_normalize(extra);
        feature.insert(feature.end(), extra.begin(), extra.end());
    }
    return feature;
}

double predict_quality(const Stroke& stroke, const Forest& model, const StrokeFeatures& features) {
    const double fwd = predict_regression(model, features(stroke, Direction::Forward), true);
    const double rev = predict_regression(model, features(stroke, Direction::Reverse), true);
    return std::max(fwd, rev);
}

std::vector<std::size_t> stroke_nms(const std::vector<Stroke>& strokes, const std::vector<double>& scores,
                                    double overlap, double tolerance) {
    std::vector<std::size_t> order(strokes.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    std::vector<std::vector<Pixel>> pixels(strokes.size());
    std::vector<std::size_t> kept;
    for (std::size_t idx : order) {
        pixels[idx] = rasterize(strokes[idx].points);
        bool suppressed = false;
        for (std::size_t other : kept) {
            if (boundary_f_measure(pixels[idx], pixels[other], tolerance).f > overlap) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(idx);
    }
    return kept;
}

std::vector<ScoredStroke> score_and_nms(const std::vector<Stroke>& strokes, const Forest& model, double overlap,
                                        const StrokeFeatures& features, double tolerance) {
    std::vector<double> scores;
    scores.reserve(strokes.size());
    for (const auto& s : strokes) scores.push_back(predict_quality(s, model, features));
    std::vector<ScoredStroke> out;
    for (std::size_t idx : stroke_nms(strokes, scores, overlap, tolerance)) {
        out.push_back({strokes[idx], {std::nullopt, scores[idx]}});
    }
    return out;
}

StrokePool image_strokes(const DetectionImage& image, const DetectionParams& params) {
    const auto regions = filter_regions(image.regions, params.regions, params.min_boundary_length,
                                        params.cluster_overlap);
    return generate_stroke_pool(regions, params.keypoints, params.scale);
}

Forest train_quality_model(const std::vector<DetectionImage>& images, const DetectionParams& params,
                           const TrainConfig& config, const StrokeFeatures& features) {
    FeatureMatrix x(features.dimension());
    std::vector<double> y;
    for (const auto& image : images) {
        const auto truth_pixels = rasterize(image.truth);
        const Point2 truth_start = image.truth.points().front();
        for (const auto& stroke : image_strokes(image, params).strokes) {
            const double quality = boundary_f_measure(rasterize(stroke.points), truth_pixels, params.tolerance).f;
            const bool forward = distance(stroke.points.points().front(), truth_start) <=
                                 distance(stroke.points.points().back(), truth_start);
            x.add_row(features(stroke, forward ? Direction::Forward : Direction::Reverse));
            y.push_back(quality);
        }
    }
    return train_regression(x, y, config);
}

double detection_ap(const std::vector<Detection>& detections, const std::vector<std::size_t>& truths_per_image,
                    double t) {
    const std::size_t total_truths = std::accumulate(truths_per_image.begin(), truths_per_image.end(), std::size_t{0});
    if (detections.empty() || total_truths == 0) return 0.0;

    std::vector<std::size_t> order(detections.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return detections[a].f_pred > detections[b].f_pred; });

    std::vector<std::vector<char>> matched(truths_per_image.size());
    for (std::size_t i = 0; i < truths_per_image.size(); ++i) matched[i].assign(truths_per_image[i], 0);

    std::size_t tp = 0;
    double ap = 0.0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        const auto& det = detections[order[rank]];
        if (det.image >= matched.size()) throw Error("detection_ap: detection refers to unknown image");
        auto& used = matched[det.image];
        if (det.truth_quality.size() != used.size()) throw Error("detection_ap: truth quality count mismatch");
        std::ptrdiff_t best = -1;
        for (std::size_t j = 0; j < used.size(); ++j) {
            if (used[j] || det.truth_quality[j] < t) continue;
            if (best < 0 || det.truth_quality[j] > det.truth_quality[static_cast<std::size_t>(best)]) {
                best = static_cast<std::ptrdiff_t>(j);
            }
        }
        if (best >= 0) {
            used[static_cast<std::size_t>(best)] = 1;
            ++tp;
            ap += static_cast<double>(tp) / static_cast<double>(rank + 1);
        }
    }
    return ap / static_cast<double>(total_truths);
}

std::vector<double> quality_grid(std::size_t count) {
    std::vector<double> grid(count);
    for (std::size_t i = 0; i < count; ++i) {
        grid[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(count);
    }
    return grid;
}

DetectionEvaluation evaluate_detection(const std::vector<Detection>& detections,
                                       const std::vector<std::size_t>& truths_per_image,
                                       const std::vector<double>& thresholds, std::size_t volume_grid) {
    DetectionEvaluation eval;
    eval.thresholds = thresholds;
    eval.empty = detections.empty();
    for (double t : thresholds) eval.ap.push_back(detection_ap(detections, truths_per_image, t));
    const auto grid = quality_grid(volume_grid);
    double vol = 0.0;
    for (double t : grid) vol += detection_ap(detections, truths_per_image, t);
    eval.ap_vol = grid.empty() ? 0.0 : vol / static_cast<double>(grid.size());
    return eval;
}

}  // namespace finid
