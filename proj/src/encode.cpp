#include <finid/encode.hpp>

#include <algorithm>
#include <cmath>

namespace finid {

std::size_t locate_tip(const PlanarCurve& curve) {
    const auto& pts = curve.points();
    const Point2 a = pts.front();
    const Point2 b = pts.back();
    const Point2 chord = b - a;
    const double chord_len = std::hypot(chord.x, chord.y);
    std::size_t best = pts.size() / 2;
    double best_dist = -1.0;
    for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
        const Point2 d = pts[i] - a;
        const double dist = chord_len > 0.0 ? std::abs(d.x * chord.y - d.y * chord.x) / chord_len
                                            : std::hypot(d.x, d.y);
        if (dist > best_dist) {
            best_dist = dist;
            best = i;
        }
    }
    return best;
}

FinContour make_fin(PlanarCurve curve, std::optional<double> source_quality) {
    if (curve.closed()) throw Error("make_fin: fin contour must be open");
    if (curve.size() < 3) throw Error("make_fin: fin contour needs an interior vertex");
    const std::size_t tip = locate_tip(curve);
    return FinContour{std::move(curve), tip, source_quality};
}

const char* to_string(DescriptorType type) {
    return type == DescriptorType::DogN ? "dogn" : "normal";
}

SubsectionSet generate_subsections(const FinContour& fin, const EncodeParams& params) {
    if (fin.curve.closed()) throw Error("generate_subsections: fin contour must be open");
    if (fin.tip_index == 0 || fin.tip_index + 1 >= fin.curve.size()) {
        throw Error("generate_subsections: tip must be an interior vertex");
    }
    SubsectionSet set{resample(fin.curve, params.contour_len), {}, 0, 0.5, {}};
    const auto response = dog_response(set.contour, params.keypoint_sigma, params.keypoint_m);
    const auto peaks = prominence_peaks(response, params.interior_keypoints);
    set.interior_found = peaks.size();

    set.keypoints.push_back(0);
    for (const auto& kp : peaks) set.keypoints.push_back(kp.index);
    set.keypoints.push_back(params.contour_len - 1);
    std::sort(set.keypoints.begin(), set.keypoints.end());

    set.tip_fraction = fin.curve.cumulative_length()[fin.tip_index] / fin.curve.length();

    const double span = static_cast<double>(params.contour_len - 1);
    for (std::size_t i = 0; i < set.keypoints.size(); ++i) {
        for (std::size_t j = i + 1; j < set.keypoints.size(); ++j) {
            const auto a = set.keypoints[i];
            const auto b = set.keypoints[j];
            set.subsections.push_back({a, b, static_cast<double>(b - a) / span, Direction::Forward});
        }
    }
    return set;
}

PlanarCurve subsection_points(const Subsection& sub, const PlanarCurve& contour) {
    if (sub.start_kp >= sub.end_kp || sub.end_kp >= contour.size()) {
        throw Error("subsection_points: invalid subsection extent");
    }
    const auto& pts = contour.points();
    std::vector<Point2> out(pts.begin() + static_cast<std::ptrdiff_t>(sub.start_kp),
                            pts.begin() + static_cast<std::ptrdiff_t>(sub.end_kp) + 1);
    if (sub.direction == Direction::Reverse) std::reverse(out.begin(), out.end());
    return make_curve(std::move(out), false);
}

namespace {

double normalize_in_place(std::vector<double>& v) {
    double sq = 0.0;
    for (double x : v) sq += x * x;
    if (sq > 0.0) {
        const double inv = 1.0 / std::sqrt(sq);
        for (auto& x : v) x *= inv;
    }
    return sq;
}

}  // namespace

std::vector<BiometricDescriptor> encode_dogn(const Subsection& sub, const PlanarCurve& contour,
                                             const EncodeParams& params) {
    const PlanarCurve samples = resample(subsection_points(sub, contour), params.descriptor_len);
    std::vector<BiometricDescriptor> out;
    for (std::size_t j = 0; j < params.scales.size(); ++j) {
        BiometricDescriptor d;
        d.values = dog_response(samples, params.scales[j], params.descriptor_m);
        d.type = DescriptorType::DogN;
        d.scale_index = j;
        d.sigma = params.scales[j];
        d.subsection = sub;
        const double energy = normalize_in_place(d.values);
        d.degenerate = energy < params.degenerate_energy;
        out.push_back(std::move(d));
    }
    return out;
}

std::vector<BiometricDescriptor> encode_normal(const Subsection& sub, const PlanarCurve& contour,
                                               const EncodeParams& params) {
    const PlanarCurve samples = resample(subsection_points(sub, contour), params.descriptor_len);
    const Point2 start = samples.points().front();
    const Point2 end = samples.points().back();
    if (start == end) throw Error("encode_normal: coincident subsection endpoints");

    const double angle = std::atan2(end.y - start.y, end.x - start.x);
    const double c = std::cos(-angle);
    const double s = std::sin(-angle);
    std::vector<double> xs(samples.size());
    std::vector<double> ys(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const Point2 d = samples[i] - start;
        xs[i] = c * d.x - s * d.y;
        ys[i] = s * d.x + c * d.y;
    }

    const std::size_t n = samples.size();
    std::vector<BiometricDescriptor> out;
    for (std::size_t j = 0; j < params.scales.size(); ++j) {
        const auto sx = gaussian_smooth(xs, params.scales[j], false);
        const auto sy = gaussian_smooth(ys, params.scales[j], false);
        BiometricDescriptor d;
        d.values.assign(2 * n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t lo = i == 0 ? 0 : i - 1;
            const std::size_t hi = i + 1 == n ? i : i + 1;
            const double tx = sx[hi] - sx[lo];
            const double ty = sy[hi] - sy[lo];
            const double len = std::hypot(tx, ty);
            if (len > 0.0) {
                d.values[i] = -ty / len;
                d.values[n + i] = tx / len;
            }
        }
        d.type = DescriptorType::Normal;
        d.scale_index = j;
        d.sigma = params.scales[j];
        d.subsection = sub;
        const double energy = normalize_in_place(d.values);
        d.degenerate = energy < params.degenerate_energy;
        out.push_back(std::move(d));
    }
    return out;
}

FinEncoding encode_fin(const FinContour& fin, EncodeRole role, const EncodeParams& params) {
    FinEncoding enc{generate_subsections(fin, params), {}, 0};
    const auto& contour = enc.subsections.contour;
    const auto keep = [&](std::vector<BiometricDescriptor>&& batch) {
        for (auto& d : batch) {
            if (d.degenerate) {
                ++enc.degenerate;
            } else {
                enc.descriptors.push_back(std::move(d));
            }
        }
    };
    for (const auto& forward : enc.subsections.subsections) {
        std::vector<Subsection> variants{forward};
        if (role == EncodeRole::Reference) {
            Subsection reverse = forward;
            reverse.direction = Direction::Reverse;
            variants.push_back(reverse);
        }
        for (const auto& sub : variants) {
            keep(encode_dogn(sub, contour, params));
            try {
                keep(encode_normal(sub, contour, params));
            } catch (const Error&) {
                enc.degenerate += params.scales.size();
            }
        }
    }
    return enc;
}

}  // namespace finid
