/**
 * @file raster.hpp
 * @brief Pixel-level views of curves: boundary pixel sets, the boundary
 *        F-measure under one-to-one pixel matching, and filled region masks.
 */
#pragma once

#include <finid/curve.hpp>

#include <cstdint>
#include <map>
#include <vector>

namespace finid {

struct Pixel {
    int x = 0;
    int y = 0;
    friend bool operator==(const Pixel&, const Pixel&) = default;
    friend auto operator<=>(const Pixel&, const Pixel&) = default;
};

/// Pixels visited by the polyline, in traversal order, without repeats.
std::vector<Pixel> rasterize(const PlanarCurve& curve);

struct FMeasure {
    double precision = 0.0;
    double recall = 0.0;
    double f = 0.0;
    std::size_t matched = 0;
    /// False when the greedy fallback was used instead of an exact matching.
    bool exact = true;
};

/// Largest pixel set size for which the exact assignment is computed.
inline constexpr std::size_t kExactMatchingLimit = 4096;

/**
 * @brief Boundary F-measure between two pixel sets.
 *
 * A maximum-cardinality one-to-one matching pairs candidate and truth pixels
 * no further apart than @p tol. Throws when @p truth is empty.
 */
FMeasure boundary_f_measure(const std::vector<Pixel>& candidate, const std::vector<Pixel>& truth,
                            double tol);

FMeasure contour_f_measure(const PlanarCurve& candidate, const PlanarCurve& truth, double tol = 2.0);

/// Filled interior of a closed polygon, sampled at integer pixel centres, as sorted row spans.
class RegionMask {
public:
    explicit RegionMask(const PlanarCurve& boundary);

    std::int64_t area() const { return area_; }
    std::int64_t intersection_area(const RegionMask& other) const;
    /// Intersection over union; 0 when both masks are empty.
    double overlap(const RegionMask& other) const;

private:
    std::map<int, std::vector<std::pair<int, int>>> rows_;
    std::int64_t area_ = 0;
};

}  // namespace finid
