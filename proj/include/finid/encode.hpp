/**
 * @file encode.hpp
 * @brief Biometric fin contour encoding: combinatorial subsection sampling
 *        between DoG keypoints and two multi-scale descriptor families
 *        (DoG norm and endpoint-aligned boundary normals).
 */
#pragma once

#include <finid/curve.hpp>
#include <finid/stroke.hpp>

#include <optional>
#include <string>
#include <vector>

namespace finid {

/// Open fin contour running from the leading-edge start to the trailing-edge end.
struct FinContour {
    PlanarCurve curve;
    /// Vertex separating the leading from the trailing edge; strictly interior.
    std::size_t tip_index = 0;
    std::optional<double> source_quality;
};

/// Vertex with maximum perpendicular distance from the chord joining the endpoints.
std::size_t locate_tip(const PlanarCurve& curve);

/// Builds a FinContour with the tip placed by locate_tip().
FinContour make_fin(PlanarCurve curve, std::optional<double> source_quality = std::nullopt);

enum class DescriptorType { DogN = 0, Normal = 1 };
inline constexpr std::size_t kDescriptorTypes = 2;
const char* to_string(DescriptorType type);

struct EncodeParams {
    std::size_t contour_len = 1024;
    double keypoint_sigma = 2.0;
    double keypoint_m = 8.0;
    /// Largest-prominence maxima kept in addition to the two endpoints.
    std::size_t interior_keypoints = 48;
    std::size_t descriptor_len = 256;
    double descriptor_m = 2.0;
    std::vector<double> scales{1.0, 2.0, 4.0, 8.0};
    /// Pre-normalization energy below which a DoG_N descriptor is degenerate.
    double degenerate_energy = 1e-12;

    friend bool operator==(const EncodeParams&, const EncodeParams&) = default;
};

struct Subsection {
    /// Keypoint sample indices on the resampled contour, start_kp < end_kp.
    std::size_t start_kp = 0;
    std::size_t end_kp = 0;
    /// Arc length as a fraction of the whole contour.
    double p = 0.0;
    Direction direction = Direction::Forward;

    friend bool operator==(const Subsection&, const Subsection&) = default;
};

struct SubsectionSet {
    /// Fin contour resampled to EncodeParams::contour_len.
    PlanarCurve contour;
    /// Sorted keypoint sample indices, endpoints included.
    std::vector<std::size_t> keypoints;
    std::size_t interior_found = 0;
    /// Tip position as a fraction of contour arc length.
    double tip_fraction = 0.5;
    std::vector<Subsection> subsections;
};

/// All unordered keypoint pairs, C(K, 2) subsections for K keypoints.
SubsectionSet generate_subsections(const FinContour& fin, const EncodeParams& params = {});

struct BiometricDescriptor {
    std::vector<double> values;
    DescriptorType type = DescriptorType::DogN;
    std::size_t scale_index = 0;
    double sigma = 1.0;
    Subsection subsection;
    std::optional<std::string> class_label;
    bool degenerate = false;

    friend bool operator==(const BiometricDescriptor&, const BiometricDescriptor&) = default;
};

/// Samples of @p contour covered by @p sub, in the subsection's traversal direction.
PlanarCurve subsection_points(const Subsection& sub, const PlanarCurve& contour);

/// One DoG_N descriptor per scale (m = descriptor_m) over the subsection resampled to descriptor_len.
std::vector<BiometricDescriptor> encode_dogn(const Subsection& sub, const PlanarCurve& contour,
                                             const EncodeParams& params = {});

/**
 * @brief One boundary-normal descriptor per scale.
 *
 * The subsection is resampled, moved so its start is at the origin and its
 * end on the positive x-axis, smoothed at each scale, and the unit left-hand
 * normals are concatenated as [x components | y components].
 */
std::vector<BiometricDescriptor> encode_normal(const Subsection& sub, const PlanarCurve& contour,
                                               const EncodeParams& params = {});

enum class EncodeRole { Reference, Query };

struct FinEncoding {
    SubsectionSet subsections;
    /// Non-degenerate descriptors only.
    std::vector<BiometricDescriptor> descriptors;
    std::size_t degenerate = 0;
};

/// Every subsection, both families, all scales. References are also encoded in reverse.
FinEncoding encode_fin(const FinContour& fin, EncodeRole role, const EncodeParams& params = {});

}  // namespace finid
