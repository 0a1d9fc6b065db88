#pragma once

#include <filesystem>

#include "padx/core.hpp"

namespace padx {

// Decodes PNG (8-bit gray/RGB; palette and 16-bit are expanded/stripped, alpha
// dropped) or baseline JPEG, chosen by file signature. Throws IoError.
ImageBuffer read_image(const std::filesystem::path& path);

// Lossless 8-bit PNG encode with fixed compression settings, so identical
// buffers always produce identical files.
void write_png(const std::filesystem::path& path, const ImageBuffer& img);

}  // namespace padx
