#pragma once

#include <cstdint>
#include <vector>

#include "ipruning/tensor.hpp"

namespace ipruning::ops {

/// 2-D cross-correlation of input [B,Cin,H,W] with kernel [Cout,Cin,K1,K2].
/// Output is [B,Cout,H',W'] with H' = (H + 2*padding - K1)/stride + 1; the
/// division must be exact and H', W' >= 1. Pass tape=nullptr for inference.
TensorPtr conv2d(Tape* tape, const TensorPtr& input, const TensorPtr& kernel,
                 std::size_t stride, std::size_t padding);

/// Adds bias[c] to every element of channel c of x [B,C,...].
TensorPtr channel_bias_add(Tape* tape, const TensorPtr& x, const TensorPtr& bias);

/// Elementwise max(0, x). Gradient is passed through where x > 0 and zero
/// elsewhere (subgradient at 0 fixed to 0).
TensorPtr relu(Tape* tape, const TensorPtr& x);

/// 2x2 max pooling with stride 2 on [B,C,H,W]; H and W must be even.
/// Ties select the first maximum in (h, w) scan order.
TensorPtr maxpool2x2(Tape* tape, const TensorPtr& x);

/// Collapses all axes but the first: [B,...] -> [B,prod(...)].
TensorPtr flatten(Tape* tape, const TensorPtr& x);

/// Affine map input[B,N] * weights[M,N]^T + bias[M] -> [B,M].
TensorPtr dense(Tape* tape, const TensorPtr& input, const TensorPtr& weights,
                const TensorPtr& bias);

/// Multiplies every slice x[:, u, ...] by bits[u] (0 or 1). Slices with
/// bits[u]=0 produce zero output and propagate zero gradient.
TensorPtr mask_units(Tape* tape, const TensorPtr& x, const std::vector<std::uint8_t>& bits);

/// Mean over the batch of -log softmax(logits)[label], stabilized by
/// max-subtraction. labels must lie in [0, C).
TensorPtr softmax_cross_entropy(Tape* tape, const TensorPtr& logits,
                                const std::vector<int>& labels);

/// Sum of all elements, as a scalar tensor.
TensorPtr sum(Tape* tape, const TensorPtr& x);

/// Elementwise square.
TensorPtr square(Tape* tape, const TensorPtr& x);

/// Multiplication by a constant.
TensorPtr scale(Tape* tape, const TensorPtr& x, double factor);

}  // namespace ipruning::ops
