#include <finid/curve.hpp>

#include <algorithm>

namespace finid {

std::vector<Keypoint> prominence_peaks(std::span<const double> signal, std::size_t n) {
    std::vector<Keypoint> peaks;
    const std::size_t len = signal.size();
    if (n == 0 || len < 3) return peaks;

    for (std::size_t i = 1; i + 1 < len; ++i) {
        if (!(signal[i - 1] < signal[i])) continue;
        std::size_t plateau_end = i;
        while (plateau_end + 1 < len && signal[plateau_end + 1] == signal[i]) ++plateau_end;
        if (plateau_end + 1 >= len || !(signal[plateau_end + 1] < signal[i])) {
            i = plateau_end;
            continue;
        }
        const double height = signal[i];

        double min_left = height;
        bool left_open = true;
        for (std::size_t k = i; k-- > 0;) {
            if (signal[k] > height) {
                left_open = false;
                break;
            }
            min_left = std::min(min_left, signal[k]);
        }
        double min_right = height;
        bool right_open = true;
        for (std::size_t k = plateau_end + 1; k < len; ++k) {
            if (signal[k] > height) {
                right_open = false;
                break;
            }
            min_right = std::min(min_right, signal[k]);
        }
        if (left_open) min_left = 0.0;
        if (right_open) min_right = 0.0;

        const double prominence = height - std::max(min_left, min_right);
        if (prominence >= 0.0) peaks.push_back({i, height, prominence});
        i = plateau_end;
    }

    std::stable_sort(peaks.begin(), peaks.end(), [](const Keypoint& a, const Keypoint& b) {
        return a.prominence > b.prominence;
    });
    if (peaks.size() > n) peaks.resize(n);
    return peaks;
}

std::vector<Keypoint> prominence_peaks_circular(std::span<const double> signal, std::size_t n) {
    const std::size_t len = signal.size();
    if (len < 3) return {};
    const auto shift = static_cast<std::size_t>(std::min_element(signal.begin(), signal.end()) - signal.begin());

    // Rotate to start at the global minimum and close the loop with it, so a
    // maximum next to the minimum is still interior.
    std::vector<double> rotated(len + 1);
    for (std::size_t i = 0; i <= len; ++i) rotated[i] = signal[(i + shift) % len];

    auto peaks = prominence_peaks(rotated, rotated.size());
    for (auto& p : peaks) p.index = (p.index + shift) % len;
    // Restore the lower-index tie break in original coordinates.
    std::stable_sort(peaks.begin(), peaks.end(), [](const Keypoint& a, const Keypoint& b) {
        if (a.prominence != b.prominence) return a.prominence > b.prominence;
        return a.index < b.index;
    });
    if (peaks.size() > n) peaks.resize(n);
    return peaks;
}

}  // namespace finid
