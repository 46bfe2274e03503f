#include "ipruning/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "ipruning/error.hpp"

namespace ipruning::ops {

namespace {

using i64 = std::int64_t;

// Minimum number of output elements before a loop is worth forking. All
// parallel loops assign disjoint output ranges to threads and keep a fixed
// inner accumulation order, so results are bit-identical at any thread count.
constexpr i64 kParallelCutoff = 4096;

bool track(const Tape* tape, const TensorPtr& a) { return tape != nullptr && a->requires_grad; }

bool track(const Tape* tape, const TensorPtr& a, const TensorPtr& b) {
  return tape != nullptr && (a->requires_grad || b->requires_grad);
}

void require_rank(const TensorPtr& t, std::size_t rank, const char* who, const char* arg) {
  if (t->rank() != rank) {
    throw DimensionError(std::string(who) + ": " + arg + " must have rank " +
                         std::to_string(rank) + ", got shape " + shape_string(t->shape));
  }
}

}  // namespace

TensorPtr conv2d(Tape* tape, const TensorPtr& input, const TensorPtr& kernel,
                 std::size_t stride, std::size_t padding) {
  require_rank(input, 4, "conv2d", "input");
  require_rank(kernel, 4, "conv2d", "kernel");
  if (stride == 0) throw InputError("conv2d: stride must be positive");
  const i64 B = static_cast<i64>(input->shape[0]);
  const i64 Cin = static_cast<i64>(input->shape[1]);
  const i64 H = static_cast<i64>(input->shape[2]);
  const i64 W = static_cast<i64>(input->shape[3]);
  const i64 Cout = static_cast<i64>(kernel->shape[0]);
  const i64 Kc = static_cast<i64>(kernel->shape[1]);
  const i64 K1 = static_cast<i64>(kernel->shape[2]);
  const i64 K2 = static_cast<i64>(kernel->shape[3]);
  if (Kc != Cin) {
    throw DimensionError("conv2d: input channel axis 1 (=" + std::to_string(Cin) +
                         ") does not match kernel channel axis 1 (=" + std::to_string(Kc) + ")");
  }
  const i64 S = static_cast<i64>(stride);
  const i64 P = static_cast<i64>(padding);
  const i64 spanH = H + 2 * P - K1;
  const i64 spanW = W + 2 * P - K2;
  if (spanH < 0 || spanH % S != 0 || spanW < 0 || spanW % S != 0) {
    throw DimensionError("conv2d: spatial axes " + std::to_string(H) + "x" + std::to_string(W) +
                         " with kernel " + std::to_string(K1) + "x" + std::to_string(K2) +
                         ", stride " + std::to_string(S) + ", padding " + std::to_string(P) +
                         " do not produce an integral output size");
  }
  const i64 OH = spanH / S + 1;
  const i64 OW = spanW / S + 1;

  auto out = Tensor::zeros({static_cast<std::size_t>(B), static_cast<std::size_t>(Cout),
                            static_cast<std::size_t>(OH), static_cast<std::size_t>(OW)},
                           track(tape, input, kernel));

  const double* in = input->data.data();
  const double* ker = kernel->data.data();
  double* o = out->data.data();
  const i64 work = B * Cout * OH * OW;

#pragma omp parallel for schedule(static) if (work >= kParallelCutoff)
  for (i64 bc = 0; bc < B * Cout; ++bc) {
    const i64 b = bc / Cout;
    const i64 co = bc % Cout;
    const double* kbase = ker + co * Cin * K1 * K2;
    for (i64 oh = 0; oh < OH; ++oh) {
      for (i64 ow = 0; ow < OW; ++ow) {
        double acc = 0.0;
        for (i64 ci = 0; ci < Cin; ++ci) {
          const double* ibase = in + ((b * Cin + ci) * H) * W;
          const double* kc = kbase + ci * K1 * K2;
          for (i64 k1 = 0; k1 < K1; ++k1) {
            const i64 ih = oh * S + k1 - P;
            if (ih < 0 || ih >= H) continue;
            for (i64 k2 = 0; k2 < K2; ++k2) {
              const i64 iw = ow * S + k2 - P;
              if (iw < 0 || iw >= W) continue;
              acc += ibase[ih * W + iw] * kc[k1 * K2 + k2];
            }
          }
        }
        o[((bc * OH) + oh) * OW + ow] = acc;
      }
    }
  }

  if (track(tape, input, kernel)) {
    tape->record([input, kernel, out, B, Cin, H, W, Cout, K1, K2, S, P, OH, OW]() {
      const double* gout = out->grad.data();
      const double* in = input->data.data();
      const double* ker = kernel->data.data();
      if (kernel->requires_grad) {
        double* gk = kernel->grad.data();
#pragma omp parallel for schedule(static) if (Cout * Cin * K1 * K2 >= kParallelCutoff / 8)
        for (i64 co = 0; co < Cout; ++co) {
          double* gkbase = gk + co * Cin * K1 * K2;
          for (i64 b = 0; b < B; ++b) {
            const double* gbase = gout + ((b * Cout + co) * OH) * OW;
            for (i64 oh = 0; oh < OH; ++oh) {
              for (i64 ow = 0; ow < OW; ++ow) {
                const double g = gbase[oh * OW + ow];
                if (g == 0.0) continue;
                for (i64 ci = 0; ci < Cin; ++ci) {
                  const double* ibase = in + ((b * Cin + ci) * H) * W;
                  double* gkc = gkbase + ci * K1 * K2;
                  for (i64 k1 = 0; k1 < K1; ++k1) {
                    const i64 ih = oh * S + k1 - P;
                    if (ih < 0 || ih >= H) continue;
                    for (i64 k2 = 0; k2 < K2; ++k2) {
                      const i64 iw = ow * S + k2 - P;
                      if (iw < 0 || iw >= W) continue;
                      gkc[k1 * K2 + k2] += g * ibase[ih * W + iw];
                    }
                  }
                }
              }
            }
          }
        }
      }
      if (input->requires_grad) {
        double* gin = input->grad.data();
#pragma omp parallel for schedule(static) if (B * Cin * H * W >= kParallelCutoff)
        for (i64 b = 0; b < B; ++b) {
          for (i64 co = 0; co < Cout; ++co) {
            const double* gbase = gout + ((b * Cout + co) * OH) * OW;
            const double* kbase = ker + co * Cin * K1 * K2;
            for (i64 oh = 0; oh < OH; ++oh) {
              for (i64 ow = 0; ow < OW; ++ow) {
                const double g = gbase[oh * OW + ow];
                if (g == 0.0) continue;
                for (i64 ci = 0; ci < Cin; ++ci) {
                  double* gibase = gin + ((b * Cin + ci) * H) * W;
                  const double* kc = kbase + ci * K1 * K2;
                  for (i64 k1 = 0; k1 < K1; ++k1) {
                    const i64 ih = oh * S + k1 - P;
                    if (ih < 0 || ih >= H) continue;
                    for (i64 k2 = 0; k2 < K2; ++k2) {
                      const i64 iw = ow * S + k2 - P;
                      if (iw < 0 || iw >= W) continue;
                      gibase[ih * W + iw] += g * kc[k1 * K2 + k2];
                    }
                  }
                }
              }
            }
          }
        }
      }
    });
  }
  return out;
}

TensorPtr channel_bias_add(Tape* tape, const TensorPtr& x, const TensorPtr& bias) {
  if (x->rank() < 2) {
    throw DimensionError("channel_bias_add: x must have rank >= 2, got " +
                         shape_string(x->shape));
  }
  require_rank(bias, 1, "channel_bias_add", "bias");
  const i64 B = static_cast<i64>(x->shape[0]);
  const i64 C = static_cast<i64>(x->shape[1]);
  if (static_cast<i64>(bias->shape[0]) != C) {
    throw DimensionError("channel_bias_add: bias length " + std::to_string(bias->shape[0]) +
                         " does not match channel axis 1 (=" + std::to_string(C) + ")");
  }
  const i64 inner = static_cast<i64>(x->size()) / (B * C);
  auto out = Tensor::zeros(x->shape, track(tape, x, bias));
  const double* xi = x->data.data();
  const double* bi = bias->data.data();
  double* o = out->data.data();
  for (i64 bc = 0; bc < B * C; ++bc) {
    const double bv = bi[bc % C];
    for (i64 j = 0; j < inner; ++j) o[bc * inner + j] = xi[bc * inner + j] + bv;
  }
  if (track(tape, x, bias)) {
    tape->record([x, bias, out, B, C, inner]() {
      const double* gout = out->grad.data();
      if (x->requires_grad) {
        double* gx = x->grad.data();
        for (std::size_t i = 0; i < x->grad.size(); ++i) gx[i] += gout[i];
      }
      if (bias->requires_grad) {
        double* gb = bias->grad.data();
        for (i64 c = 0; c < C; ++c) {
          double acc = 0.0;
          for (i64 b = 0; b < B; ++b) {
            const double* g = gout + (b * C + c) * inner;
            for (i64 j = 0; j < inner; ++j) acc += g[j];
          }
          gb[c] += acc;
        }
      }
    });
  }
  return out;
}

TensorPtr relu(Tape* tape, const TensorPtr& x) {
  auto out = Tensor::zeros(x->shape, track(tape, x));
  const double* xi = x->data.data();
  double* o = out->data.data();
  const i64 n = static_cast<i64>(x->size());
  for (i64 i = 0; i < n; ++i) o[i] = xi[i] > 0.0 ? xi[i] : 0.0;
  if (track(tape, x)) {
    tape->record([x, out, n]() {
      const double* gout = out->grad.data();
      const double* xi = x->data.data();
      double* gx = x->grad.data();
      for (i64 i = 0; i < n; ++i) {
        if (xi[i] > 0.0) gx[i] += gout[i];
      }
    });
  }
  return out;
}

TensorPtr maxpool2x2(Tape* tape, const TensorPtr& x) {
  require_rank(x, 4, "maxpool2x2", "x");
  const i64 B = static_cast<i64>(x->shape[0]);
  const i64 C = static_cast<i64>(x->shape[1]);
  const i64 H = static_cast<i64>(x->shape[2]);
  const i64 W = static_cast<i64>(x->shape[3]);
  if (H % 2 != 0 || W % 2 != 0) {
    throw DimensionError("maxpool2x2: spatial axes must be even, got " + std::to_string(H) + "x" +
                         std::to_string(W));
  }
  const i64 OH = H / 2;
  const i64 OW = W / 2;
  auto out = Tensor::zeros({static_cast<std::size_t>(B), static_cast<std::size_t>(C),
                            static_cast<std::size_t>(OH), static_cast<std::size_t>(OW)},
                           track(tape, x));
  auto argmax = std::make_shared<std::vector<i64>>(static_cast<std::size_t>(B * C * OH * OW));
  const double* xi = x->data.data();
  double* o = out->data.data();
  i64* am = argmax->data();
  for (i64 bc = 0; bc < B * C; ++bc) {
    const double* plane = xi + bc * H * W;
    for (i64 oh = 0; oh < OH; ++oh) {
      for (i64 ow = 0; ow < OW; ++ow) {
        i64 best = (2 * oh) * W + 2 * ow;
        double bv = plane[best];
        for (i64 dh = 0; dh < 2; ++dh) {
          for (i64 dw = 0; dw < 2; ++dw) {
            const i64 idx = (2 * oh + dh) * W + (2 * ow + dw);
            if (plane[idx] > bv) {
              bv = plane[idx];
              best = idx;
            }
          }
        }
        const i64 oidx = (bc * OH + oh) * OW + ow;
        o[oidx] = bv;
        am[oidx] = bc * H * W + best;
      }
    }
  }
  if (track(tape, x)) {
    tape->record([x, out, argmax]() {
      const double* gout = out->grad.data();
      double* gx = x->grad.data();
      const i64* am = argmax->data();
      const i64 n = static_cast<i64>(out->size());
      for (i64 i = 0; i < n; ++i) gx[am[i]] += gout[i];
    });
  }
  return out;
}

TensorPtr flatten(Tape* tape, const TensorPtr& x) {
  if (x->rank() < 1) throw DimensionError("flatten: x must have rank >= 1");
  const std::size_t B = x->shape[0];
  const std::size_t rest = x->size() / B;
  auto out = Tensor::zeros({B, rest}, track(tape, x));
  out->data = x->data;
  if (track(tape, x)) {
    tape->record([x, out]() {
      double* gx = x->grad.data();
      const double* gout = out->grad.data();
      for (std::size_t i = 0; i < x->grad.size(); ++i) gx[i] += gout[i];
    });
  }
  return out;
}

TensorPtr dense(Tape* tape, const TensorPtr& input, const TensorPtr& weights,
                const TensorPtr& bias) {
  require_rank(input, 2, "dense", "input");
  require_rank(weights, 2, "dense", "weights");
  require_rank(bias, 1, "dense", "bias");
  const i64 B = static_cast<i64>(input->shape[0]);
  const i64 N = static_cast<i64>(input->shape[1]);
  const i64 M = static_cast<i64>(weights->shape[0]);
  if (static_cast<i64>(weights->shape[1]) != N) {
    throw DimensionError("dense: input axis 1 (=" + std::to_string(N) +
                         ") does not match weights axis 1 (=" + std::to_string(weights->shape[1]) +
                         ")");
  }
  if (static_cast<i64>(bias->shape[0]) != M) {
    throw DimensionError("dense: bias length " + std::to_string(bias->shape[0]) +
                         " does not match weights axis 0 (=" + std::to_string(M) + ")");
  }
  const bool rec = tape != nullptr && (input->requires_grad || weights->requires_grad ||
                                       bias->requires_grad);
  auto out = Tensor::zeros({static_cast<std::size_t>(B), static_cast<std::size_t>(M)}, rec);
  const double* in = input->data.data();
  const double* w = weights->data.data();
  const double* bi = bias->data.data();
  double* o = out->data.data();
#pragma omp parallel for schedule(static) if (B * M * N >= kParallelCutoff)
  for (i64 b = 0; b < B; ++b) {
    for (i64 m = 0; m < M; ++m) {
      double acc = bi[m];
      const double* wr = w + m * N;
      const double* ir = in + b * N;
      for (i64 n = 0; n < N; ++n) acc += ir[n] * wr[n];
      o[b * M + m] = acc;
    }
  }
  if (rec) {
    tape->record([input, weights, bias, out, B, N, M]() {
      const double* gout = out->grad.data();
      const double* in = input->data.data();
      const double* w = weights->data.data();
      if (weights->requires_grad) {
        double* gw = weights->grad.data();
#pragma omp parallel for schedule(static) if (B * M * N >= kParallelCutoff)
        for (i64 m = 0; m < M; ++m) {
          double* gwr = gw + m * N;
          for (i64 b = 0; b < B; ++b) {
            const double g = gout[b * M + m];
            if (g == 0.0) continue;
            const double* ir = in + b * N;
            for (i64 n = 0; n < N; ++n) gwr[n] += g * ir[n];
          }
        }
      }
      if (bias->requires_grad) {
        double* gb = bias->grad.data();
        for (i64 m = 0; m < M; ++m) {
          double acc = 0.0;
          for (i64 b = 0; b < B; ++b) acc += gout[b * M + m];
          gb[m] += acc;
        }
      }
      if (input->requires_grad) {
        double* gi = input->grad.data();
#pragma omp parallel for schedule(static) if (B * M * N >= kParallelCutoff)
        for (i64 b = 0; b < B; ++b) {
          double* gir = gi + b * N;
          for (i64 m = 0; m < M; ++m) {
            const double g = gout[b * M + m];
            if (g == 0.0) continue;
            const double* wr = w + m * N;
            for (i64 n = 0; n < N; ++n) gir[n] += g * wr[n];
          }
        }
      }
    });
  }
  return out;
}

TensorPtr mask_units(Tape* tape, const TensorPtr& x, const std::vector<std::uint8_t>& bits) {
  if (x->rank() < 2) {
    throw DimensionError("mask_units: x must have rank >= 2, got " + shape_string(x->shape));
  }
  const i64 B = static_cast<i64>(x->shape[0]);
  const i64 U = static_cast<i64>(x->shape[1]);
  if (static_cast<i64>(bits.size()) != U) {
    throw InputError("mask_units: bit vector length " + std::to_string(bits.size()) +
                     " does not match unit axis 1 (=" + std::to_string(U) + ")");
  }
  const i64 inner = static_cast<i64>(x->size()) / (B * U);
  auto out = Tensor::zeros(x->shape, track(tape, x));
  const double* xi = x->data.data();
  double* o = out->data.data();
  for (i64 bu = 0; bu < B * U; ++bu) {
    if (bits[bu % U]) {
      const double* src = xi + bu * inner;
      double* dst = o + bu * inner;
      for (i64 j = 0; j < inner; ++j) dst[j] = src[j];
    }
    // dropped units stay exactly zero
  }
  if (track(tape, x)) {
    auto bitcopy = std::make_shared<std::vector<std::uint8_t>>(bits);
    tape->record([x, out, bitcopy, B, U, inner]() {
      const double* gout = out->grad.data();
      double* gx = x->grad.data();
      for (i64 bu = 0; bu < B * U; ++bu) {
        if (!(*bitcopy)[bu % U]) continue;
        const double* g = gout + bu * inner;
        double* dst = gx + bu * inner;
        for (i64 j = 0; j < inner; ++j) dst[j] += g[j];
      }
    });
  }
  return out;
}

TensorPtr softmax_cross_entropy(Tape* tape, const TensorPtr& logits,
                                const std::vector<int>& labels) {
  require_rank(logits, 2, "softmax_cross_entropy", "logits");
  const i64 B = static_cast<i64>(logits->shape[0]);
  const i64 C = static_cast<i64>(logits->shape[1]);
  if (static_cast<i64>(labels.size()) != B) {
    throw InputError("softmax_cross_entropy: got " + std::to_string(labels.size()) +
                     " labels for batch of " + std::to_string(B));
  }
  for (i64 b = 0; b < B; ++b) {
    if (labels[b] < 0 || labels[b] >= C) {
      throw InputError("softmax_cross_entropy: label " + std::to_string(labels[b]) + " at row " +
                       std::to_string(b) + " outside [0," + std::to_string(C) + ")");
    }
  }
  auto probs = std::make_shared<std::vector<double>>(static_cast<std::size_t>(B * C));
  const double* z = logits->data.data();
  double* p = probs->data();
  double total = 0.0;
  for (i64 b = 0; b < B; ++b) {
    const double* row = z + b * C;
    double m = row[0];
    for (i64 c = 1; c < C; ++c) m = std::max(m, row[c]);
    double denom = 0.0;
    for (i64 c = 0; c < C; ++c) denom += std::exp(row[c] - m);
    for (i64 c = 0; c < C; ++c) p[b * C + c] = std::exp(row[c] - m) / denom;
    total += std::log(denom) - (row[labels[b]] - m);
  }
  auto out = Tensor::scalar(total / static_cast<double>(B), track(tape, logits));
  if (track(tape, logits)) {
    auto labelcopy = std::make_shared<std::vector<int>>(labels);
    tape->record([logits, out, probs, labelcopy, B, C]() {
      const double g = out->grad[0];
      double* gz = logits->grad.data();
      const double* p = probs->data();
      const double invB = 1.0 / static_cast<double>(B);
      for (i64 b = 0; b < B; ++b) {
        for (i64 c = 0; c < C; ++c) {
          const double onehot = (c == (*labelcopy)[b]) ? 1.0 : 0.0;
          gz[b * C + c] += g * (p[b * C + c] - onehot) * invB;
        }
      }
    });
  }
  return out;
}

TensorPtr sum(Tape* tape, const TensorPtr& x) {
  double acc = 0.0;
  for (double v : x->data) acc += v;
  auto out = Tensor::scalar(acc, track(tape, x));
  if (track(tape, x)) {
    tape->record([x, out]() {
      const double g = out->grad[0];
      double* gx = x->grad.data();
      for (std::size_t i = 0; i < x->grad.size(); ++i) gx[i] += g;
    });
  }
  return out;
}

TensorPtr square(Tape* tape, const TensorPtr& x) {
  auto out = Tensor::zeros(x->shape, track(tape, x));
  for (std::size_t i = 0; i < x->size(); ++i) out->data[i] = x->data[i] * x->data[i];
  if (track(tape, x)) {
    tape->record([x, out]() {
      const double* gout = out->grad.data();
      double* gx = x->grad.data();
      for (std::size_t i = 0; i < x->size(); ++i) gx[i] += 2.0 * x->data[i] * gout[i];
    });
  }
  return out;
}

TensorPtr scale(Tape* tape, const TensorPtr& x, double factor) {
  auto out = Tensor::zeros(x->shape, track(tape, x));
  for (std::size_t i = 0; i < x->size(); ++i) out->data[i] = x->data[i] * factor;
  if (track(tape, x)) {
    tape->record([x, out, factor]() {
      const double* gout = out->grad.data();
      double* gx = x->grad.data();
      for (std::size_t i = 0; i < x->size(); ++i) gx[i] += factor * gout[i];
    });
  }
  return out;
}

}  // namespace ipruning::ops
