// Feature-wise linear modulation of an H x W x C feature volume by per-channel
// scale gamma and shift beta (both 1 x 1 x C):  gamma (.) F (+) beta.

#include <cstdio>

#include "bcast/bcast.hpp"

int main() {
  using namespace bcast;
  const std::size_t H = 3, W = 3, C = 4;

  Rng rng(2024);
  const Tensor features = random_normal(Shape{H, W, C}, rng);
  const Tensor gamma = make_tensor(Shape{1, 1, C}, {1.0, 0.5, 2.0, 0.0});
  const Tensor beta = make_tensor(Shape{1, 1, C}, {0.0, 1.0, -1.0, 3.0});

  const Tensor out = sum(product(gamma, features), beta);
  std::printf("FiLM: %s -> %s\n", features.shape().str().c_str(), out.shape().str().c_str());

  // Channel statistics before and after: the mean moves by beta and scales
  // by gamma; channel 4 collapses to the constant 3.
  const Tensor n_pix = Tensor::scalar(1.0 / static_cast<double>(H * W));
  const Tensor mean_in = product(mode_sum(features, {0, 1}), n_pix);
  const Tensor mean_out = product(mode_sum(out, {0, 1}), n_pix);
  for (std::size_t c = 0; c < C; ++c) {
    std::printf("channel %zu: mean %+.4f -> %+.4f (gamma %.1f, beta %+.1f)\n", c + 1,
                mean_in(0, 0, c), mean_out(0, 0, c), gamma(0, 0, c), beta(0, 0, c));
  }
  return 0;
}
