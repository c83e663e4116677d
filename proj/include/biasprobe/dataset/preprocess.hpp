#pragma once

#include "biasprobe/dataset/image.hpp"
#include "biasprobe/tensor.hpp"

namespace biasprobe::dataset {

// Half-pixel-centred bilinear resampling.
Image resize_bilinear(const Image& image, int width, int height);

// Resize to resolution x resolution and map [0,255] -> [-1,1], channels first.
// Returns a 1 x 3 x R x R tensor.
Tensor preprocess(const Image& image, int resolution);
// Inverse affine map with rounding and clamping; reads sample `n`.
Image postprocess(const Tensor& t, int n = 0);

}  // namespace biasprobe::dataset
