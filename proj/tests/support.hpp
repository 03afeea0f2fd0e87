#pragma once

#include <finid/curve.hpp>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace finid::test {

inline PlanarCurve circle(double r, std::size_t n, Point2 c = {0.0, 0.0}) {
    std::vector<Point2> pts;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
        pts.push_back({c.x + r * std::cos(a), c.y + r * std::sin(a)});
    }
    return make_curve(std::move(pts), true);
}

/// Closed star with @p lobes bumps.
inline PlanarCurve star(double r, double bump, std::size_t lobes, std::size_t n, Point2 c = {0.0, 0.0}) {
    std::vector<Point2> pts;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
        const double rr = r * (1.0 + bump * std::cos(static_cast<double>(lobes) * a));
        pts.push_back({c.x + rr * std::cos(a), c.y + rr * std::sin(a)});
    }
    return make_curve(std::move(pts), true);
}

inline std::string scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::path(FINID_TEST_TMP) / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

}  // namespace finid::test
