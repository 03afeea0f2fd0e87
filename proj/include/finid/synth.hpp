/**
 * @file synth.hpp
 * @brief Deterministic synthetic fin populations, perturbed observations,
 *        reference/query datasets and pseudo region pools.
 */
#pragma once

#include <finid/encode.hpp>
#include <finid/stroke.hpp>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace finid {

/// Triangular notch cut into the trailing edge.
struct Notch {
    /// Centre as a fraction of the trailing edge, from tip to base.
    double position = 0.5;
    /// Pixels, measured along the inward normal.
    double depth = 1.0;
    /// Half width as a fraction of the trailing edge.
    double width = 0.02;

    friend bool operator==(const Notch&, const Notch&) = default;
};

/**
 * Leading edge: quadratic Bezier from the base start (0,0) to the tip.
 * Trailing edge: quadratic Bezier from the tip to the base end, plus notches.
 */
struct SyntheticIndividual {
    int id = 0;
    std::string label;
    Point2 tip;
    Point2 base_end;
    /// Outward bulge of the leading edge and inward sag of the trailing edge, in chord lengths.
    double leading_bulge = 0.15;
    double trailing_sag = 0.15;
    std::vector<Notch> jags;

    friend bool operator==(const SyntheticIndividual&, const SyntheticIndividual&) = default;
};

struct PopulationParams {
    std::size_t min_jags = 3;
    std::size_t max_jags = 7;
    /// Minimum trailing-edge Hausdorff distance between any two individuals, pixels.
    double min_separation = 2.0;
};

std::vector<SyntheticIndividual> generate_population(std::size_t n, std::uint64_t seed,
                                                     const PopulationParams& params = {});

/// Noise-free outline at roughly one pixel vertex spacing.
PlanarCurve base_contour(const SyntheticIndividual& ind);

/// Vertices of the base contour after the tip.
PlanarCurve trailing_edge(const SyntheticIndividual& ind);

double hausdorff_distance(const PlanarCurve& a, const PlanarCurve& b);

struct PerturbationConfig {
    double rotation = 0.0;
    double scale = 1.0;
    /// Per-vertex noise std as a fraction of contour length.
    double noise = 0.0;
    /// Fraction of the arc length removed from the leading-edge end.
    double occlusion = 0.0;
    std::uint64_t seed = 0;

    friend bool operator==(const PerturbationConfig&, const PerturbationConfig&) = default;
};

/// Rotation about the origin, uniform scale, occlusion and jitter; the tip is relocated.
FinContour render_observation(const SyntheticIndividual& ind, const PerturbationConfig& cfg);

struct PerturbationRange {
    double max_rotation = 0.2617993877991494;
    double min_scale = 0.8;
    double max_scale = 1.25;
    double max_noise = 0.003;
    double max_occlusion = 0.2;

    friend bool operator==(const PerturbationRange&, const PerturbationRange&) = default;
};

PerturbationConfig sample_perturbation(const PerturbationRange& range, std::mt19937_64& rng);

struct DatasetEntry {
    std::string name;
    std::string label;
    bool reference = false;
    PerturbationConfig perturbation;
    FinContour fin;
};

struct Dataset {
    std::uint64_t seed = 0;
    std::vector<DatasetEntry> entries;
};

/// One unperturbed reference and per_individual - 1 perturbed queries per individual.
Dataset make_dataset(const std::vector<SyntheticIndividual>& population, std::size_t per_individual,
                     const PerturbationRange& range, std::uint64_t seed);

/**
 * @brief Region pool around one fin: fin plus body, fin alone, body alone,
 *        a near duplicate, distractor ellipses and tiny regions.
 */
DetectionImage synthetic_region_pool(const FinContour& fin, std::uint64_t seed);

}  // namespace finid
