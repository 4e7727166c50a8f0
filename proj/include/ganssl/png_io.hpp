#pragma once
// Minimal PNG writer for the image-grid artifacts: 8-bit grayscale or
// RGB, zlib-compressed, no interlacing.

#include <string>

#include "ganssl/tensor.hpp"

namespace ganssl::png {

// image shape {C, H, W} with C 1 (gray) or 3 (RGB); values clamped to
// [0,1] and quantized to 8 bits.
void write(const std::string& path, const Tensor<float>& image);

}  // namespace ganssl::png
