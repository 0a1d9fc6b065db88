#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace padx {

// Pixel coordinates: origin top-left, x to the right, y downward.
struct Point {
  int x = 0;
  int y = 0;

  friend bool operator==(const Point&, const Point&) = default;
  friend auto operator<=>(const Point& a, const Point& b) {
    if (auto c = a.y <=> b.y; c != 0) return c;
    return a.x <=> b.x;
  }
};

struct BBox {
  int x = 0;  // left
  int y = 0;  // top
  int w = 0;
  int h = 0;

  int right() const { return x + w; }
  int bottom() const { return y + h; }
  long long area() const { return static_cast<long long>(w) * h; }
  bool valid() const { return w > 0 && h > 0; }
  bool fits_in(int width, int height) const {
    return valid() && x >= 0 && y >= 0 && right() <= width &&
           bottom() <= height;
  }

  friend bool operator==(const BBox&, const BBox&) = default;
};

// 8-bit raster, 1 (gray) or 3 (RGB) interleaved channels, row-major.
class ImageBuffer {
 public:
  ImageBuffer() = default;
  ImageBuffer(int width, int height, int channels, std::uint8_t fill = 0);
  ImageBuffer(int width, int height, int channels,
              std::vector<std::uint8_t> data);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }

  std::uint8_t at(int x, int y, int c = 0) const {
    return data_[index(x, y, c)];
  }
  std::uint8_t& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }

  std::span<const std::uint8_t> data() const { return data_; }
  std::span<std::uint8_t> data() { return data_; }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<std::uint8_t> data_;
};

class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height, bool fill = false);

  // Mask covering an entire width x height rectangle.
  static BinaryMask full(int width, int height) {
    return BinaryMask(width, height, true);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_ &&
           bits_[static_cast<std::size_t>(y) * width_ + x] != 0;
  }
  void set(int x, int y, bool inside = true);
  std::size_t count() const;

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

// Sub-image at box; throws BoundsError naming the offending coordinate.
ImageBuffer crop(const ImageBuffer& img, const BBox& box);

// ITU-R BT.601 luma, rounded to nearest. 1-channel input is returned as is.
ImageBuffer to_grayscale(const ImageBuffer& img);

// Replicates a gray raster into 3 channels (or returns RGB input unchanged).
ImageBuffer to_rgb(const ImageBuffer& img);

// Converts to the requested channel count (1 or 3).
ImageBuffer convert_channels(const ImageBuffer& img, int channels);

// Bilinear resampling with pixel-center alignment.
ImageBuffer resize_bilinear(const ImageBuffer& img, int width, int height);

// Outer 4-connected boundary of the mask: pixels outside the mask with at least
// one 4-neighbour inside. Sorted by (y, x). Coordinates may fall one pixel
// outside the mask raster.
std::vector<Point> boundary_of(const BinaryMask& mask);

// Copies src into dst with its top-left at (x, y); src must fit.
void paste(ImageBuffer& dst, const ImageBuffer& src, int x, int y);

}  // namespace padx
