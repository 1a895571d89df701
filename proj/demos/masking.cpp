// Masking an H x W x 3 image with an H x W binary mask. The mask is a
// lower-order operand: its missing third mode is a trailing one, so it is
// replicated across the colour channels.

#include <cstdio>

#include "bcast/bcast.hpp"

int main() {
  using namespace bcast;
  const std::size_t H = 4, W = 6;

  Tensor image = Tensor::zeros(Shape{H, W, 3});
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t w = 0; w < W; ++w)
      for (std::size_t h = 0; h < H; ++h) image(h, w, c) = 0.1 * (h + w) + 0.3 * c;

  // Keep a centred 2x4 window.
  Tensor mask = Tensor::zeros(Shape{H, W});
  for (std::size_t w = 1; w < W - 1; ++w)
    for (std::size_t h = 1; h < H - 1; ++h) mask(h, w) = 1.0;

  const Tensor masked = product(image, mask);
  std::printf("image %s (.) mask %s -> %s\n", image.shape().str().c_str(),
              mask.shape().str().c_str(), masked.shape().str().c_str());
  for (std::size_t c = 0; c < 3; ++c) {
    std::printf("channel %zu\n", c + 1);
    for (std::size_t h = 0; h < H; ++h) {
      for (std::size_t w = 0; w < W; ++w) std::printf(" %4.1f", masked(h, w, c));
      std::printf("\n");
    }
  }
  return 0;
}
