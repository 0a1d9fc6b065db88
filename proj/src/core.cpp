#include "padx/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "padx/errors.hpp"

namespace padx {

namespace {

void check_dims(int width, int height, int channels) {
  if (width < 1 || height < 1) {
    throw DimensionError("image dimensions must be positive, got " +
                         std::to_string(width) + "x" + std::to_string(height));
  }
  if (channels != 1 && channels != 3) {
    throw DimensionError("unsupported channel count " +
                         std::to_string(channels));
  }
}

}  // namespace

ImageBuffer::ImageBuffer(int width, int height, int channels, std::uint8_t fill)
    : width_(width), height_(height), channels_(channels) {
  check_dims(width, height, channels);
  data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

ImageBuffer::ImageBuffer(int width, int height, int channels,
                         std::vector<std::uint8_t> data)
    : width_(width), height_(height), channels_(channels),
      data_(std::move(data)) {
  check_dims(width, height, channels);
  if (data_.size() != static_cast<std::size_t>(width) * height * channels) {
    throw DimensionError("pixel buffer holds " + std::to_string(data_.size()) +
                         " bytes, expected " +
                         std::to_string(static_cast<std::size_t>(width) *
                                        height * channels));
  }
}

BinaryMask::BinaryMask(int width, int height, bool fill)
    : width_(width), height_(height) {
  if (width < 1 || height < 1) {
    throw DimensionError("mask dimensions must be positive");
  }
  bits_.assign(static_cast<std::size_t>(width) * height, fill ? 1 : 0);
}

void BinaryMask::set(int x, int y, bool inside) {
  if (x < 0 || y < 0 || x >= width_ || y >= height_) {
    throw BoundsError("mask coordinate (" + std::to_string(x) + "," +
                      std::to_string(y) + ") outside " +
                      std::to_string(width_) + "x" + std::to_string(height_));
  }
  bits_[static_cast<std::size_t>(y) * width_ + x] = inside ? 1 : 0;
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

ImageBuffer crop(const ImageBuffer& img, const BBox& box) {
  auto fail = [&](const std::string& what, int value) {
    throw BoundsError("crop box (" + std::to_string(box.x) + "," +
                      std::to_string(box.y) + "," + std::to_string(box.w) +
                      "," + std::to_string(box.h) + ") invalid on " +
                      std::to_string(img.width()) + "x" +
                      std::to_string(img.height()) + " image: " + what + "=" +
                      std::to_string(value));
  };
  if (box.w <= 0) fail("w", box.w);
  if (box.h <= 0) fail("h", box.h);
  if (box.x < 0) fail("x", box.x);
  if (box.y < 0) fail("y", box.y);
  if (box.right() > img.width()) fail("x+w", box.right());
  if (box.bottom() > img.height()) fail("y+h", box.bottom());

  const int ch = img.channels();
  std::vector<std::uint8_t> out(static_cast<std::size_t>(box.w) * box.h * ch);
  auto src = img.data();
  const std::size_t row_bytes = static_cast<std::size_t>(box.w) * ch;
  for (int v = 0; v < box.h; ++v) {
    const std::size_t from =
        (static_cast<std::size_t>(box.y + v) * img.width() + box.x) * ch;
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(from), row_bytes,
                out.begin() + static_cast<std::ptrdiff_t>(v * row_bytes));
  }
  return ImageBuffer(box.w, box.h, ch, std::move(out));
}

ImageBuffer to_grayscale(const ImageBuffer& img) {
  if (img.channels() == 1) return img;
  if (img.channels() != 3) {
    throw DimensionError("to_grayscale: unsupported channel count " +
                         std::to_string(img.channels()));
  }
  ImageBuffer gray(img.width(), img.height(), 1);
  auto src = img.data();
  auto dst = gray.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const double luma = 0.299 * src[3 * i] + 0.587 * src[3 * i + 1] +
                        0.114 * src[3 * i + 2];
    dst[i] = static_cast<std::uint8_t>(std::lround(luma));
  }
  return gray;
}

ImageBuffer to_rgb(const ImageBuffer& img) {
  if (img.channels() == 3) return img;
  ImageBuffer rgb(img.width(), img.height(), 3);
  auto src = img.data();
  auto dst = rgb.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[3 * i] = dst[3 * i + 1] = dst[3 * i + 2] = src[i];
  }
  return rgb;
}

ImageBuffer convert_channels(const ImageBuffer& img, int channels) {
  if (channels == 1) return to_grayscale(img);
  if (channels == 3) return to_rgb(img);
  throw DimensionError("unsupported channel count " + std::to_string(channels));
}

ImageBuffer resize_bilinear(const ImageBuffer& img, int width, int height) {
  if (width == img.width() && height == img.height()) return img;
  ImageBuffer out(width, height, img.channels());
  const double sx = static_cast<double>(img.width()) / width;
  const double sy = static_cast<double>(img.height()) / height;
  const int max_x = img.width() - 1;
  const int max_y = img.height() - 1;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0,
                                 static_cast<double>(max_y));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, max_y);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0,
                                   static_cast<double>(max_x));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, max_x);
      const double wx = fx - x0;
      for (int c = 0; c < img.channels(); ++c) {
        const double top = (1 - wx) * img.at(x0, y0, c) + wx * img.at(x1, y0, c);
        const double bot = (1 - wx) * img.at(x0, y1, c) + wx * img.at(x1, y1, c);
        const double v = (1 - wy) * top + wy * bot;
        out.at(x, y, c) =
            static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return out;
}

std::vector<Point> boundary_of(const BinaryMask& mask) {
  if (mask.count() == 0) {
    throw InputError("boundary_of: mask has no interior pixels");
  }
  std::vector<Point> ring;
  for (int y = -1; y <= mask.height(); ++y) {
    for (int x = -1; x <= mask.width(); ++x) {
      if (mask.contains(x, y)) continue;
      if (mask.contains(x - 1, y) || mask.contains(x + 1, y) ||
          mask.contains(x, y - 1) || mask.contains(x, y + 1)) {
        ring.push_back({x, y});
      }
    }
  }
  return ring;
}

void paste(ImageBuffer& dst, const ImageBuffer& src, int x, int y) {
  if (src.channels() != dst.channels()) {
    throw DimensionError("paste: channel count mismatch");
  }
  if (!BBox{x, y, src.width(), src.height()}.fits_in(dst.width(),
                                                     dst.height())) {
    throw BoundsError("paste: source does not fit at (" + std::to_string(x) +
                      "," + std::to_string(y) + ")");
  }
  for (int v = 0; v < src.height(); ++v) {
    for (int u = 0; u < src.width(); ++u) {
      for (int c = 0; c < src.channels(); ++c) {
        dst.at(x + u, y + v, c) = src.at(u, v, c);
      }
    }
  }
}

}  // namespace padx
