/**
 * @file curve.hpp
 * @brief Planar curve primitives: arc-length resampling, Gaussian scale-space
 *        smoothing and the difference-of-Gaussian corner response.
 */
#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace finid {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }

double distance(Point2 a, Point2 b);

/**
 * @brief Ordered 2D point sequence, open or closed.
 *
 * Closed curves wrap implicitly from the last point back to the first; the
 * first point is never repeated at the end. Consecutive points are distinct.
 * Closed curves need at least 3 points, open curves at least 2.
 */
class PlanarCurve {
public:
    PlanarCurve(std::vector<Point2> points, bool closed);

    const std::vector<Point2>& points() const { return points_; }
    bool closed() const { return closed_; }
    std::size_t size() const { return points_.size(); }
    const Point2& operator[](std::size_t i) const { return points_[i]; }

    /// Number of edges: size() for closed curves, size()-1 for open ones.
    std::size_t edge_count() const;
    double length() const;

    /// Cumulative arc length at each vertex, starting at 0.
    std::vector<double> cumulative_length() const;

    std::vector<double> xs() const;
    std::vector<double> ys() const;

    /// Same points in the opposite traversal direction.
    PlanarCurve reversed() const;

    friend bool operator==(const PlanarCurve&, const PlanarCurve&) = default;

private:
    std::vector<Point2> points_;
    bool closed_;
};

/// Drops consecutive duplicates (and a duplicated closing point) before building a curve.
PlanarCurve make_curve(std::vector<Point2> points, bool closed);

struct ScaleSpaceParams {
    double sigma = 1.0;
    double m = 4.0;
    std::size_t resample_len = 128;
};

/**
 * @brief Resample to @p n points uniformly spaced in arc length.
 *
 * Open curves keep both endpoints exactly. Closed curves start at the first
 * point and use a spacing of length()/n.
 */
PlanarCurve resample(const PlanarCurve& curve, std::size_t n);

/// Normalized Gaussian kernel truncated at ceil(4 sigma), length 2r+1.
std::vector<double> gaussian_kernel(double sigma);

/**
 * @brief Convolve @p signal with a zero-mean Gaussian.
 *
 * Closed signals use circular convolution. Open signals are extended by point
 * reflection about their end samples (s[-k] = 2 s[0] - s[k]), which keeps
 * linear signals fixed.
 */
std::vector<double> gaussian_smooth(std::span<const double> signal, double sigma, bool closed);

/// Squared difference between the (m sigma)- and sigma-smoothed curve, per sample.
std::vector<double> dog_response(const PlanarCurve& curve, double sigma, double m);

/// As above; resamples first when the curve length differs from params.resample_len.
std::vector<double> dog_response(const PlanarCurve& curve, const ScaleSpaceParams& params);

struct Keypoint {
    std::size_t index = 0;
    double response = 0.0;
    double prominence = 0.0;

    friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

/**
 * @brief Local maxima ranked by prominence.
 *
 * For each interior local maximum the signal is scanned left and right until
 * a strictly higher sample or the signal end. The minimum over each interval
 * is taken, with intervals that reach an end counting as zero, and the larger
 * of the two minima is the reference level. Plateaus report their first
 * sample. Returns at most @p n keypoints by descending prominence, ties by
 * lower index. Peaks with negative prominence are dropped.
 */
std::vector<Keypoint> prominence_peaks(std::span<const double> signal, std::size_t n);

/// Prominence peaks of a periodic signal: the signal is rotated to start at its global minimum.
std::vector<Keypoint> prominence_peaks_circular(std::span<const double> signal, std::size_t n);

/**
 * @brief Keypoints on the curve resampled to params.resample_len.
 *
 * Closed curves are treated as periodic signals. For open curves the two end
 * samples are appended when @p include_endpoints is set (with zero
 * prominence). Indices refer to the resampled curve.
 */
std::vector<Keypoint> detect_keypoints(const PlanarCurve& curve, std::size_t n,
                                       const ScaleSpaceParams& params,
                                       bool include_endpoints = false);

/// Point at arc length @p s from the first vertex (wrapping for closed curves).
Point2 point_at(const PlanarCurve& curve, double s);

/**
 * @brief The stretch of @p curve between arc lengths @p from and @p to.
 *
 * Endpoints are interpolated; the original vertices strictly between them are
 * kept. On closed curves @p to < @p from wraps through the first vertex, and
 * the result is open. On open curves the direction follows the sign of
 * to - from.
 */
PlanarCurve extract_arc(const PlanarCurve& curve, double from, double to);

/// Nearest vertex of @p curve to sample @p index of its @p resample_len resampling, by arc length.
std::size_t source_index(const PlanarCurve& curve, std::size_t resample_len, std::size_t index);

}  // namespace finid
