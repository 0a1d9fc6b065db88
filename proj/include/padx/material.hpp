#pragma once

#include <span>

#include "padx/core.hpp"
#include "padx/dataset.hpp"
#include "padx/rng.hpp"

namespace padx::material {

// X-ray attenuation proxy in [0, 1]: 0 = transparent (white), 1 = opaque
// (black). Dense/metallic material renders dark in a transmission scan.
struct AttenuationScore {
  double value = 0.0;
};

AttenuationScore attenuation_score(const ImageBuffer& img, const BBox& region);

// Mask variant: mask must have the image's dimensions.
AttenuationScore attenuation_score(const ImageBuffer& img,
                                   const BinaryMask& region);

// Mean central-difference gradient magnitude of the grayscale image over the
// region, scaled so that a full 0->255 swing on both axes scores 1. Neighbours
// outside the image are replicated from the edge.
double gradient_energy(const ImageBuffer& img, const BBox& region);

inline constexpr double kDefaultComplexityWeight = 0.5;
inline constexpr int kDefaultMinPatch = 8;

struct HostCandidate {
  dataset::Instance instance;
  const ImageBuffer* image = nullptr;
};

struct HostSelection {
  dataset::Instance host;
  double contrast = 0.0;    // |attenuation(host) - attenuation(patch)|
  double complexity = 0.0;  // gradient_energy over the host box
  double combined = 0.0;    // contrast + lambda * complexity
};

// Argmax of the combined score; ties go to the lowest instance id.
HostSelection select_host(std::span<const HostCandidate> hosts,
                          const ImageBuffer& tail_patch,
                          double lambda = kDefaultComplexityWeight);

struct Placement {
  BBox box;
  double scale = 1.0;
};

// Chooses where a patch_w x patch_h patch lands: its centre pixel inside
// host_box, the whole box inside the image with a 1-pixel margin, shrunk
// uniformly if needed. Throws InfeasibleError when the host box or the scaled
// patch is smaller than min_patch on either axis.
Placement propose_placement(const BBox& host_box, int patch_w, int patch_h,
                            int image_w, int image_h, Rng& rng,
                            int min_patch = kDefaultMinPatch);

}  // namespace padx::material
