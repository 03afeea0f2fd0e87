/**
 * @file curve.cpp
 * @brief Planar curve primitives and scale-space filtering.
 */

#include <finid/curve.hpp>

#include <algorithm>
#include <cmath>

namespace finid {

double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

PlanarCurve::PlanarCurve(std::vector<Point2> points, bool closed)
    : points_(std::move(points)), closed_(closed) {
    const std::size_t min_points = closed_ ? 3 : 2;
    if (points_.size() < min_points) {
        throw Error("PlanarCurve: need at least " + std::to_string(min_points) + " points, got " +
                    std::to_string(points_.size()));
    }
    for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
        if (points_[i] == points_[i + 1]) {
            throw Error("PlanarCurve: consecutive duplicate point at index " + std::to_string(i));
        }
    }
    if (closed_ && points_.front() == points_.back()) {
        throw Error("PlanarCurve: closed curve repeats its first point");
    }
    for (const auto& p : points_) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
            throw Error("PlanarCurve: non-finite coordinate");
        }
    }
}

std::size_t PlanarCurve::edge_count() const {
    return closed_ ? points_.size() : points_.size() - 1;
}

double PlanarCurve::length() const {
    double total = 0.0;
    for (std::size_t i = 0; i < edge_count(); ++i) {
        total += distance(points_[i], points_[(i + 1) % points_.size()]);
    }
    return total;
}

std::vector<double> PlanarCurve::cumulative_length() const {
    std::vector<double> acc(points_.size(), 0.0);
    for (std::size_t i = 1; i < points_.size(); ++i) {
        acc[i] = acc[i - 1] + distance(points_[i - 1], points_[i]);
    }
    return acc;
}

std::vector<double> PlanarCurve::xs() const {
    std::vector<double> out(points_.size());
    std::transform(points_.begin(), points_.end(), out.begin(), [](const Point2& p) { return p.x; });
    return out;
}

std::vector<double> PlanarCurve::ys() const {
    std::vector<double> out(points_.size());
    std::transform(points_.begin(), points_.end(), out.begin(), [](const Point2& p) { return p.y; });
    return out;
}

PlanarCurve PlanarCurve::reversed() const {
    std::vector<Point2> pts(points_.rbegin(), points_.rend());
    return PlanarCurve(std::move(pts), closed_);
}

PlanarCurve make_curve(std::vector<Point2> points, bool closed) {
    std::vector<Point2> cleaned;
    cleaned.reserve(points.size());
    for (const auto& p : points) {
        if (cleaned.empty() || !(cleaned.back() == p)) cleaned.push_back(p);
    }
    if (closed) {
        while (cleaned.size() > 1 && cleaned.front() == cleaned.back()) cleaned.pop_back();
    }
    return PlanarCurve(std::move(cleaned), closed);
}

PlanarCurve resample(const PlanarCurve& curve, std::size_t n) {
    if (n < 2 || (curve.closed() && n < 3)) {
        throw Error("resample: sample count too small");
    }
    const double total = curve.length();
    if (!(total > 0.0)) throw Error("resample: degenerate curve of zero length");

    const auto& pts = curve.points();
    const std::size_t edges = curve.edge_count();
    const double step = curve.closed() ? total / static_cast<double>(n)
                                       : total / static_cast<double>(n - 1);

    std::vector<Point2> out;
    out.reserve(n);
    std::size_t edge = 0;
    double edge_start = 0.0;
    double edge_len = distance(pts[0], pts[1 % pts.size()]);
    const std::size_t interior = curve.closed() ? n : n - 1;
    for (std::size_t k = 0; k < interior; ++k) {
        const double s = step * static_cast<double>(k);
        while (edge + 1 < edges && s > edge_start + edge_len) {
            edge_start += edge_len;
            ++edge;
            edge_len = distance(pts[edge], pts[(edge + 1) % pts.size()]);
        }
        const Point2& a = pts[edge];
        const Point2& b = pts[(edge + 1) % pts.size()];
        const double t = std::clamp((s - edge_start) / edge_len, 0.0, 1.0);
        out.push_back(a + t * (b - a));
    }
    if (!curve.closed()) out.push_back(pts.back());
    return make_curve(std::move(out), curve.closed());
}

std::vector<double> gaussian_kernel(double sigma) {
    if (!(sigma > 0.0)) throw Error("gaussian_kernel: sigma must be positive");
    const auto radius = static_cast<std::ptrdiff_t>(std::ceil(4.0 * sigma));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
        const double v = std::exp(-0.5 * static_cast<double>(k * k) / (sigma * sigma));
        kernel[static_cast<std::size_t>(k + radius)] = v;
        sum += v;
    }
    for (auto& v : kernel) v /= sum;
    return kernel;
}

namespace {

// Point-reflected extension of an open signal to an arbitrary index.
double reflected(std::span<const double> s, std::ptrdiff_t k) {
    const auto last = static_cast<std::ptrdiff_t>(s.size()) - 1;
    if (last == 0) return s[0];
    if (k < 0) return 2.0 * s[0] - reflected(s, -k);
    if (k > last) return 2.0 * s[static_cast<std::size_t>(last)] - reflected(s, 2 * last - k);
    return s[static_cast<std::size_t>(k)];
}

}  // namespace

std::vector<double> gaussian_smooth(std::span<const double> signal, double sigma, bool closed) {
    const auto kernel = gaussian_kernel(sigma);
    const auto radius = static_cast<std::ptrdiff_t>(kernel.size() / 2);
    const auto n = static_cast<std::ptrdiff_t>(signal.size());
    std::vector<double> out(signal.size(), 0.0);
    if (n == 0) return out;

    for (std::ptrdiff_t i = 0; i < n; ++i) {
        double acc = 0.0;
        if (closed) {
            for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
                const std::ptrdiff_t j = ((i + k) % n + n) % n;
                acc += kernel[static_cast<std::size_t>(k + radius)] * signal[static_cast<std::size_t>(j)];
            }
        } else if (i - radius >= 0 && i + radius < n) {
            for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
                acc += kernel[static_cast<std::size_t>(k + radius)] * signal[static_cast<std::size_t>(i + k)];
            }
        } else {
            for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
                acc += kernel[static_cast<std::size_t>(k + radius)] * reflected(signal, i + k);
            }
        }
        out[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

std::vector<double> dog_response(const PlanarCurve& curve, double sigma, double m) {
    if (!(m > 0.0)) throw Error("dog_response: m must be positive");
    const auto xs = curve.xs();
    const auto ys = curve.ys();
    const bool closed = curve.closed();
    const auto xf = gaussian_smooth(xs, sigma, closed);
    const auto yf = gaussian_smooth(ys, sigma, closed);
    const auto xc = gaussian_smooth(xs, m * sigma, closed);
    const auto yc = gaussian_smooth(ys, m * sigma, closed);
    std::vector<double> d(xs.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double dx = xc[i] - xf[i];
        const double dy = yc[i] - yf[i];
        d[i] = dx * dx + dy * dy;
    }
    return d;
}

std::vector<double> dog_response(const PlanarCurve& curve, const ScaleSpaceParams& params) {
    if (curve.size() == params.resample_len) return dog_response(curve, params.sigma, params.m);
    return dog_response(resample(curve, params.resample_len), params.sigma, params.m);
}

std::vector<Keypoint> detect_keypoints(const PlanarCurve& curve, std::size_t n,
                                       const ScaleSpaceParams& params, bool include_endpoints) {
    const PlanarCurve sampled = resample(curve, params.resample_len);
    const auto response = dog_response(sampled, params.sigma, params.m);
    auto peaks = curve.closed() ? prominence_peaks_circular(response, n) : prominence_peaks(response, n);
    if (!curve.closed() && include_endpoints) {
        peaks.push_back({0, response.front(), 0.0});
        peaks.push_back({response.size() - 1, response.back(), 0.0});
    }
    return peaks;
}

Point2 point_at(const PlanarCurve& curve, double s) {
    const auto& pts = curve.points();
    const double total = curve.length();
    if (curve.closed()) {
        s = std::fmod(s, total);
        if (s < 0.0) s += total;
    } else {
        s = std::clamp(s, 0.0, total);
    }
    double start = 0.0;
    for (std::size_t e = 0; e < curve.edge_count(); ++e) {
        const Point2 a = pts[e];
        const Point2 b = pts[(e + 1) % pts.size()];
        const double len = distance(a, b);
        if (s <= start + len || e + 1 == curve.edge_count()) {
            const double t = std::clamp((s - start) / len, 0.0, 1.0);
            return a + t * (b - a);
        }
        start += len;
    }
    return pts.back();
}

PlanarCurve extract_arc(const PlanarCurve& curve, double from, double to) {
    const auto& pts = curve.points();
    const auto cum = curve.cumulative_length();
    const double total = curve.length();
    std::vector<Point2> out;
    if (curve.closed()) {
        from = std::fmod(from, total);
        if (from < 0.0) from += total;
        to = std::fmod(to, total);
        if (to < 0.0) to += total;
        if (from == to) throw Error("extract_arc: empty arc on closed curve");
        out.push_back(point_at(curve, from));
        if (from < to) {
            for (std::size_t i = 0; i < pts.size(); ++i) {
                if (cum[i] > from && cum[i] < to) out.push_back(pts[i]);
            }
        } else {
            for (std::size_t i = 0; i < pts.size(); ++i) {
                if (cum[i] > from) out.push_back(pts[i]);
            }
            for (std::size_t i = 0; i < pts.size(); ++i) {
                if (cum[i] < to) out.push_back(pts[i]);
            }
        }
        out.push_back(point_at(curve, to));
        return make_curve(std::move(out), false);
    }
    from = std::clamp(from, 0.0, total);
    to = std::clamp(to, 0.0, total);
    if (from == to) throw Error("extract_arc: empty arc");
    const bool forward = from < to;
    const double lo = std::min(from, to);
    const double hi = std::max(from, to);
    out.push_back(point_at(curve, lo));
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (cum[i] > lo && cum[i] < hi) out.push_back(pts[i]);
    }
    out.push_back(point_at(curve, hi));
    if (!forward) std::reverse(out.begin(), out.end());
    return make_curve(std::move(out), false);
}

std::size_t source_index(const PlanarCurve& curve, std::size_t resample_len, std::size_t index) {
    const auto cum = curve.cumulative_length();
    const double total = curve.length();
    const double step = curve.closed() ? total / static_cast<double>(resample_len)
                                       : total / static_cast<double>(resample_len - 1);
    const double s = step * static_cast<double>(index);
    const auto it = std::lower_bound(cum.begin(), cum.end(), s);
    std::size_t best = 0;
    double best_gap = total;
    const auto consider = [&](std::size_t i, double at) {
        const double gap = std::abs(at - s);
        if (gap < best_gap) {
            best_gap = gap;
            best = i;
        }
    };
    const auto hi = static_cast<std::size_t>(it - cum.begin());
    if (hi < cum.size()) consider(hi, cum[hi]);
    if (hi > 0) consider(hi - 1, cum[hi - 1]);
    if (curve.closed()) consider(0, total);
    return best;
}

}  // namespace finid
