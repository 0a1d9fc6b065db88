#include "padx/material.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "padx/errors.hpp"

namespace padx::material {

namespace {

void require_inside(const ImageBuffer& img, const BBox& region,
                    const char* op) {
  if (!region.valid()) {
    throw InputError(std::string(op) + ": empty region");
  }
  if (!region.fits_in(img.width(), img.height())) {
    throw BoundsError(std::string(op) + ": region (" +
                      std::to_string(region.x) + "," +
                      std::to_string(region.y) + "," +
                      std::to_string(region.w) + "," +
                      std::to_string(region.h) + ") outside image");
  }
}

AttenuationScore from_mean(double mean) {
  return {std::clamp(1.0 - mean / 255.0, 0.0, 1.0)};
}

}  // namespace

AttenuationScore attenuation_score(const ImageBuffer& img, const BBox& region) {
  require_inside(img, region, "attenuation_score");
  const ImageBuffer gray = to_grayscale(crop(img, region));
  double sum = 0.0;
  for (auto v : gray.data()) sum += v;
  return from_mean(sum / static_cast<double>(gray.data().size()));
}

AttenuationScore attenuation_score(const ImageBuffer& img,
                                   const BinaryMask& region) {
  if (region.width() != img.width() || region.height() != img.height()) {
    throw DimensionError("attenuation_score: mask and image sizes differ");
  }
  const ImageBuffer gray = to_grayscale(img);
  double sum = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < gray.height(); ++y) {
    for (int x = 0; x < gray.width(); ++x) {
      if (region.contains(x, y)) {
        sum += gray.at(x, y);
        ++n;
      }
    }
  }
  if (n == 0) throw InputError("attenuation_score: empty region");
  return from_mean(sum / static_cast<double>(n));
}

double gradient_energy(const ImageBuffer& img, const BBox& region) {
  require_inside(img, region, "gradient_energy");
  if (region.area() < 4) {
    throw InputError("gradient_energy: degenerate region (area " +
                     std::to_string(region.area()) + " < 4)");
  }
  const ImageBuffer gray = to_grayscale(img);
  const int max_x = gray.width() - 1;
  const int max_y = gray.height() - 1;
  double sum = 0.0;
  for (int y = region.y; y < region.bottom(); ++y) {
    for (int x = region.x; x < region.right(); ++x) {
      const double gx = double(gray.at(std::min(x + 1, max_x), y)) -
                        gray.at(std::max(x - 1, 0), y);
      const double gy = double(gray.at(x, std::min(y + 1, max_y))) -
                        gray.at(x, std::max(y - 1, 0));
      sum += std::hypot(gx, gy);
    }
  }
  const double mean = sum / static_cast<double>(region.area());
  return std::clamp(mean / (255.0 * std::numbers::sqrt2), 0.0, 1.0);
}

HostSelection select_host(std::span<const HostCandidate> hosts,
                          const ImageBuffer& tail_patch, double lambda) {
  if (hosts.empty()) throw InputError("select_host: no host candidates");
  std::vector<const HostCandidate*> ordered;
  for (const auto& h : hosts) {
    if (!h.image) throw InputError("select_host: candidate without image");
    ordered.push_back(&h);
  }
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const HostCandidate* a, const HostCandidate* b) {
                     return a->instance.id < b->instance.id;
                   });

  const double tail_alpha =
      attenuation_score(tail_patch,
                        BBox{0, 0, tail_patch.width(), tail_patch.height()})
          .value;
  HostSelection best;
  bool have_best = false;
  for (const HostCandidate* h : ordered) {
    const BBox& box = h->instance.bbox;
    HostSelection s;
    s.host = h->instance;
    s.contrast = std::abs(attenuation_score(*h->image, box).value - tail_alpha);
    s.complexity = box.area() >= 4 ? gradient_energy(*h->image, box) : 0.0;
    s.combined = s.contrast + lambda * s.complexity;
    if (!have_best || s.combined > best.combined) {
      best = s;
      have_best = true;
    }
  }
  return best;
}

Placement propose_placement(const BBox& host_box, int patch_w, int patch_h,
                            int image_w, int image_h, Rng& rng,
                            int min_patch) {
  if (patch_w <= 0 || patch_h <= 0) {
    throw InputError("propose_placement: patch dimensions must be positive");
  }
  if (host_box.w < min_patch || host_box.h < min_patch) {
    throw InfeasibleError("host box " + std::to_string(host_box.w) + "x" +
                          std::to_string(host_box.h) +
                          " smaller than minimum patch " +
                          std::to_string(min_patch));
  }
  const int usable_w = image_w - 2;
  const int usable_h = image_h - 2;
  const int long_side = std::max(patch_w, patch_h);
  double scale = std::min({1.0, static_cast<double>(usable_w) / patch_w,
                           static_cast<double>(usable_h) / patch_h});

  // Shrink one pixel (on the long side) at a time until the centre can sit in
  // the host box while the box stays inside the image margin.
  for (;;) {
    const int w = static_cast<int>(std::floor(patch_w * scale + 1e-9));
    const int h = static_cast<int>(std::floor(patch_h * scale + 1e-9));
    if (w < min_patch || h < min_patch) {
      throw InfeasibleError("patch " + std::to_string(patch_w) + "x" +
                            std::to_string(patch_h) +
                            " cannot be placed over host box at or above "
                            "minimum size " + std::to_string(min_patch));
    }
    const int x_lo = std::max(1, host_box.x - w / 2);
    const int x_hi = std::min(image_w - 1 - w, host_box.right() - 1 - w / 2);
    const int y_lo = std::max(1, host_box.y - h / 2);
    const int y_hi = std::min(image_h - 1 - h, host_box.bottom() - 1 - h / 2);
    if (x_lo <= x_hi && y_lo <= y_hi) {
      const int x = static_cast<int>(rng.uniform_int(x_lo, x_hi));
      const int y = static_cast<int>(rng.uniform_int(y_lo, y_hi));
      return {BBox{x, y, w, h}, scale};
    }
    const int current_long = std::max(w, h);
    scale = static_cast<double>(current_long - 1) / long_side;
  }
}

}  // namespace padx::material
