#include <finid/metrics.hpp>

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace finid {

PrCurve precision_recall(std::span<const double> scores, std::span<const char> positive) {
    if (scores.size() != positive.size()) throw std::invalid_argument("precision_recall: size mismatch");
    PrCurve curve;
    curve.positives = static_cast<std::size_t>(std::count_if(positive.begin(), positive.end(), [](char p) { return p != 0; }));
    if (curve.positives == 0) return curve;

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    const double total = static_cast<double>(curve.positives);
    std::size_t tp = 0;
    std::size_t seen = 0;
    double prev_recall = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        const double level = scores[order[i]];
        while (i < order.size() && scores[order[i]] == level) {
            if (positive[order[i]]) ++tp;
            ++seen;
            ++i;
        }
        const double recall = static_cast<double>(tp) / total;
        const double precision = static_cast<double>(tp) / static_cast<double>(seen);
        curve.ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        curve.points.push_back({level, recall, precision});
    }
    return curve;
}

}  // namespace finid
