#pragma once

#include <filesystem>

#include "gentle/sensing.hpp"

namespace gentle {

/// 8-bit grayscale PNG of channel 0, values clamped to [0,1].
void write_png(const Image& image, const std::filesystem::path& path);

}  // namespace gentle
