#pragma once

#include <span>
#include <vector>

namespace finid {

struct PrPoint {
    double threshold = 0.0;
    double recall = 0.0;
    double precision = 0.0;
};

struct PrCurve {
    std::vector<PrPoint> points;
    double ap = 0.0;
    std::size_t positives = 0;
};

/**
 * @brief Precision-recall curve over scored items and its area.
 *
 * Items with equal scores enter the ranking together, so the curve has one
 * point per distinct score. AP = sum over points of (recall gain) x precision.
 * AP is 0 when there are no positives.
 */
PrCurve precision_recall(std::span<const double> scores, std::span<const char> positive);

}  // namespace finid
