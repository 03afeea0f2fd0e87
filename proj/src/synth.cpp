#include <finid/synth.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

namespace finid {

namespace {

constexpr std::size_t kDenseSamples = 1500;

std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * unit(rng);
}

double gaussian(std::mt19937_64& rng) {
    double u = unit(rng);
    while (u <= 0.0) u = unit(rng);
    const double v = unit(rng);
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
}

Point2 bezier(Point2 a, Point2 c, Point2 b, double t) {
    const double s = 1.0 - t;
    return (s * s) * a + (2.0 * s * t) * c + (t * t) * b;
}

Point2 bezier_tangent(Point2 a, Point2 c, Point2 b, double t) {
    return (2.0 * (1.0 - t)) * (c - a) + (2.0 * t) * (b - c);
}

Point2 left_normal(Point2 d) {
    const double len = std::hypot(d.x, d.y);
    return {-d.y / len, d.x / len};
}

Point2 control_point(Point2 a, Point2 b, double offset) {
    const Point2 d = b - a;
    const double len = std::hypot(d.x, d.y);
    return 0.5 * (a + b) + (offset * len) * left_normal(d);
}

void segment(std::vector<Point2>& out, Point2 p, Point2 q) {
    const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(distance(p, q))));
    for (std::size_t i = 0; i < steps; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(steps);
        out.push_back(p + t * (q - p));
    }
}

void ellipse(std::vector<Point2>& out, Point2 centre, double rx, double ry) {
    const double circumference = std::numbers::pi * (3.0 * (rx + ry) - std::sqrt((3.0 * rx + ry) * (rx + 3.0 * ry)));
    const auto n = static_cast<std::size_t>(std::max(8.0, std::ceil(circumference)));
    for (std::size_t i = 0; i < n; ++i) {
        const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
        out.push_back({centre.x + rx * std::cos(a), centre.y + ry * std::sin(a)});
    }
}

SyntheticIndividual draw_individual(int id, std::mt19937_64& rng, const PopulationParams& params) {
    SyntheticIndividual ind;
    ind.id = id;
    ind.tip = {uniform(rng, 55.0, 85.0), uniform(rng, 90.0, 120.0)};
    ind.base_end = {uniform(rng, 115.0, 145.0), 0.0};
    ind.leading_bulge = uniform(rng, 0.08, 0.2);
    ind.trailing_sag = uniform(rng, 0.05, 0.18);
    const auto span = params.max_jags - params.min_jags + 1;
    const std::size_t count = params.min_jags + static_cast<std::size_t>(rng() % span);
    for (std::size_t j = 0; j < count; ++j) {
        ind.jags.push_back({uniform(rng, 0.08, 0.92), uniform(rng, 1.5, 5.0), uniform(rng, 0.01, 0.04)});
    }
    std::sort(ind.jags.begin(), ind.jags.end(), [](const Notch& a, const Notch& b) { return a.position < b.position; });
    return ind;
}

}  // namespace

PlanarCurve base_contour(const SyntheticIndividual& ind) {
    const Point2 a{0.0, 0.0};
    const Point2 lead_ctrl = control_point(a, ind.tip, ind.leading_bulge);
    const Point2 trail_ctrl = control_point(ind.tip, ind.base_end, -ind.trailing_sag);
    std::vector<Point2> dense;
    dense.reserve(2 * kDenseSamples + 1);
    for (std::size_t i = 0; i < kDenseSamples; ++i) {
        dense.push_back(bezier(a, lead_ctrl, ind.tip, static_cast<double>(i) / kDenseSamples));
    }
    for (std::size_t i = 0; i <= kDenseSamples; ++i) {
        const double t = static_cast<double>(i) / kDenseSamples;
        Point2 p = bezier(ind.tip, trail_ctrl, ind.base_end, t);
        double cut = 0.0;
        for (const auto& jag : ind.jags) cut += jag.depth * std::max(0.0, 1.0 - std::abs(t - jag.position) / jag.width);
        if (cut > 0.0) p = p + (-cut) * left_normal(bezier_tangent(ind.tip, trail_ctrl, ind.base_end, t));
        dense.push_back(p);
    }
    const PlanarCurve curve = make_curve(std::move(dense), false);
    const auto n = static_cast<std::size_t>(std::llround(curve.length())) + 1;
    return resample(curve, std::max<std::size_t>(n, 3));
}

PlanarCurve trailing_edge(const SyntheticIndividual& ind) {
    const PlanarCurve base = base_contour(ind);
    const std::size_t tip = locate_tip(base);
    return PlanarCurve({base.points().begin() + static_cast<std::ptrdiff_t>(tip), base.points().end()}, false);
}

double hausdorff_distance(const PlanarCurve& a, const PlanarCurve& b) {
    const auto directed = [](const PlanarCurve& from, const PlanarCurve& to) {
        double worst = 0.0;
        for (const auto& p : from.points()) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& q : to.points()) best = std::min(best, distance(p, q));
            worst = std::max(worst, best);
        }
        return worst;
    };
    return std::max(directed(a, b), directed(b, a));
}

std::vector<SyntheticIndividual> generate_population(std::size_t n, std::uint64_t seed, const PopulationParams& params) {
    if (n < 2) throw Error("generate_population: at least two individuals are required");
    if (params.min_jags > params.max_jags) throw Error("generate_population: min_jags exceeds max_jags");
    std::vector<SyntheticIndividual> out;
    std::vector<PlanarCurve> edges;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::uint64_t attempt = 0;; ++attempt) {
            if (attempt > 1000) throw Error("generate_population: separation rule cannot be met");
            std::mt19937_64 rng(mix(seed ^ mix((static_cast<std::uint64_t>(i) << 20) + attempt)));
            SyntheticIndividual ind = draw_individual(static_cast<int>(i), rng, params);
            char label[32];
            std::snprintf(label, sizeof label, "ind%03zu", i);
            ind.label = label;
            PlanarCurve edge = trailing_edge(ind);
            const bool separated = std::all_of(edges.begin(), edges.end(), [&](const PlanarCurve& e) {
                return hausdorff_distance(edge, e) > params.min_separation;
            });
            if (!separated) continue;
            edges.push_back(std::move(edge));
            out.push_back(std::move(ind));
            break;
        }
    }
    return out;
}

FinContour render_observation(const SyntheticIndividual& ind, const PerturbationConfig& cfg) {
    if (!(cfg.occlusion >= 0.0 && cfg.occlusion < 0.75)) throw Error("render_observation: occlusion must lie in [0, 0.75)");
    if (!(cfg.scale > 0.0)) throw Error("render_observation: scale must be positive");
    if (!(cfg.noise >= 0.0)) throw Error("render_observation: noise must be non-negative");
    const PlanarCurve base = base_contour(ind);
    const auto cum = base.cumulative_length();
    const std::size_t tip = locate_tip(base);
    const double cut = cfg.occlusion * base.length();
    if (cut >= cum[tip]) throw Error("render_observation: occlusion removes the tip");

    std::vector<Point2> pts;
    if (cut > 0.0) pts.push_back(point_at(base, cut));
    for (std::size_t i = 0; i < base.size(); ++i) {
        if (cum[i] > cut || (cut == 0.0 && i == 0)) pts.push_back(base[i]);
    }

    const double c = std::cos(cfg.rotation);
    const double s = std::sin(cfg.rotation);
    for (auto& p : pts) p = {cfg.scale * (c * p.x - s * p.y), cfg.scale * (s * p.x + c * p.y)};

    if (cfg.noise > 0.0) {
        double length = 0.0;
        for (std::size_t i = 1; i < pts.size(); ++i) length += distance(pts[i - 1], pts[i]);
        const double sd = cfg.noise * length;
        std::mt19937_64 rng(cfg.seed);
        for (auto& p : pts) {
            const double dx = gaussian(rng);
            const double dy = gaussian(rng);
            p = {p.x + sd * dx, p.y + sd * dy};
        }
    }
    return make_fin(make_curve(std::move(pts), false));
}

PerturbationConfig sample_perturbation(const PerturbationRange& range, std::mt19937_64& rng) {
    PerturbationConfig cfg;
    cfg.rotation = uniform(rng, -range.max_rotation, range.max_rotation);
    cfg.scale = std::exp(uniform(rng, std::log(range.min_scale), std::log(range.max_scale)));
    cfg.noise = uniform(rng, 0.0, range.max_noise);
    cfg.occlusion = uniform(rng, 0.0, range.max_occlusion);
    cfg.seed = rng();
    return cfg;
}

Dataset make_dataset(const std::vector<SyntheticIndividual>& population, std::size_t per_individual,
                     const PerturbationRange& range, std::uint64_t seed) {
    if (per_individual < 2) throw Error("make_dataset: at least two observations per individual are required");
    Dataset ds;
    ds.seed = seed;
    std::mt19937_64 rng(seed);
    for (const auto& ind : population) {
        ds.entries.push_back({ind.label + "_ref", ind.label, true, {}, render_observation(ind, {})});
        for (std::size_t q = 1; q < per_individual; ++q) {
            const PerturbationConfig cfg = sample_perturbation(range, rng);
            ds.entries.push_back({ind.label + "_q" + std::to_string(q), ind.label, false, cfg, render_observation(ind, cfg)});
        }
    }
    return ds;
}

DetectionImage synthetic_region_pool(const FinContour& fin, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const auto& f = fin.curve.points();
    const Point2 a = f.front();
    const Point2 b = f.back();
    const Point2 chord = b - a;
    const double chord_len = std::hypot(chord.x, chord.y);
    const Point2 u{chord.x / chord_len, chord.y / chord_len};
    Point2 n = left_normal(chord);
    const Point2 tip = f[fin.tip_index] - a;
    if (tip.x * n.x + tip.y * n.y < 0.0) n = -1.0 * n;

    const std::vector<Point2> body_corners{b, b + 60.0 * u - 40.0 * n, b + 20.0 * u - 100.0 * n,
                                           a - 20.0 * u - 100.0 * n, a - 60.0 * u - 40.0 * n, a};
    std::vector<Point2> body_path;
    for (std::size_t i = 0; i + 1 < body_corners.size(); ++i) segment(body_path, body_corners[i], body_corners[i + 1]);

    DetectionImage image{{}, fin.curve};
    int next_id = 0;
    const auto add = [&](std::vector<Point2> pts, int rank) {
        image.regions.push_back({make_curve(std::move(pts), true), rank, next_id++});
    };

    std::vector<Point2> fin_body(f.begin(), f.end() - 1);
    fin_body.insert(fin_body.end(), body_path.begin(), body_path.end());
    add(fin_body, 0);

    std::vector<Point2> jittered = fin_body;
    for (auto& p : jittered) p = {p.x + uniform(rng, -0.3, 0.3), p.y + uniform(rng, -0.3, 0.3)};
    add(jittered, 1);

    std::vector<Point2> fin_alone(f.begin(), f.end() - 1);
    segment(fin_alone, b, a);
    add(fin_alone, 2);

    std::vector<Point2> body = body_path;
    segment(body, a, b);
    add(body, 3);

    for (int e = 0; e < 3; ++e) {
        std::vector<Point2> pts;
        const Point2 centre = a + uniform(rng, -50.0, chord_len + 50.0) * u + uniform(rng, 40.0, 160.0) * n;
        ellipse(pts, centre, uniform(rng, 15.0, 45.0), uniform(rng, 15.0, 45.0));
        add(pts, 4 + e);
    }
    for (int e = 0; e < 2; ++e) {
        std::vector<Point2> pts;
        ellipse(pts, a + uniform(rng, 0.0, chord_len) * u - uniform(rng, 30.0, 80.0) * n, 5.0, 4.0);
        add(pts, 7 + e);
    }
    return image;
}

}  // namespace finid
