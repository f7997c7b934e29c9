#pragma once

#include "emgkey/core/random.hpp"
#include "emgkey/nn/graph.hpp"

#include <span>
#include <string>
#include <vector>

namespace emgkey::nn {

// Elementwise and structural operations. Every function checks shapes and
// throws ShapeError("<op>: ...") naming the offending shapes.

template <class T> Var<T> relu(const Var<T>& x);
template <class T> Var<T> sigmoid(const Var<T>& x);
template <class T> Var<T> tanh(const Var<T>& x);
/// Row-wise softmax over the last axis of a [B, K] tensor.
template <class T> Var<T> softmax(const Var<T>& x);
template <class T> Var<T> mul(const Var<T>& a, const Var<T>& b);
/// Elementwise sum of equally shaped tensors (residual connections, skip sums).
template <class T> Var<T> add(std::span<const Var<T>> xs);
template <class T> Var<T> add(const Var<T>& a, const Var<T>& b);
/// tanh(filter) * sigmoid(gate).
template <class T> Var<T> gated_activation(const Var<T>& filter, const Var<T>& gate);
/// Inverted dropout: kept values are scaled by 1/(1-p). Identity unless training.
template <class T> Var<T> dropout(const Var<T>& x, double p, bool training, Rng& rng);
/// [B, ...] -> [B, prod(...)].
template <class T> Var<T> flatten(const Var<T>& x);
/// Mean over every axis after the channel axis: [B, C, ...] -> [B, C].
template <class T> Var<T> global_avg_pool(const Var<T>& x);
/// [B, C, L] -> [B, C, (L - kernel) / stride + 1].
template <class T> Var<T> max_pool1d(const Var<T>& x, std::size_t kernel, std::size_t stride);

struct Conv1dParams {
  std::size_t groups = 1;
  std::size_t dilation = 1;
  std::size_t pad_left = 0;
  std::size_t pad_right = 0;
};

/// x [B, Cin, L], w [Cout, Cin/groups, K], optional bias [Cout] (null Var for none).
template <class T>
Var<T> conv1d(const Var<T>& x, const Var<T>& w, const Var<T>& bias, const Conv1dParams& p);

struct Conv2dParams {
  std::size_t stride = 1;
  std::size_t pad = 0;
};

/// x [B, Cin, H, W], w [Cout, Cin, KH, KW], optional bias [Cout].
template <class T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& bias, const Conv2dParams& p);

/// x [B, in], w [out, in], optional bias [out].
template <class T> Var<T> linear(const Var<T>& x, const Var<T>& w, const Var<T>& bias);

struct BatchNormState {
  double momentum = 0.1;
  double eps = 1e-5;
};

/// Per-channel normalisation over the batch and trailing axes of [B, C, ...].
/// Training uses batch statistics and updates the running estimates
/// (unbiased variance); inference uses the running estimates.
template <class T>
Var<T> batch_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                  Tensor<T>& running_mean, Tensor<T>& running_var, bool training,
                  const BatchNormState& cfg);

/// Single-layer LSTM over x [B, C, L] with gate order (input, forget, cell,
/// output): w_ih [4H, C], w_hh [4H, H], bias [4H]. Returns [B, H, L] when
/// return_sequences is set, otherwise the last hidden state [B, H].
template <class T>
Var<T> lstm(const Var<T>& x, const Var<T>& w_ih, const Var<T>& w_hh, const Var<T>& bias,
            bool return_sequences);

/// Fixed complex linear map applied along the last axis followed by the
/// squared magnitude: for a signal v of length L, out[s, t] = (Re v)^2 + (Im v)^2
/// with Re = real * v, Im = imag * v, both [S * L, L] row-major.
template <class T>
struct SpectralOperator {
  std::size_t scales = 0;
  std::size_t length = 0;
  Buffer<T> real;
  Buffer<T> imag;
};

/// x [B, C, L] -> [B, C, S, L].
template <class T> Var<T> spectral_power(const Var<T>& x, const SpectralOperator<T>& op);

/// Mean binary cross-entropy on logits [B] or [B, 1]; weights per sample may
/// be empty (all ones). Reduction: sum(w * l) / sum(w).
template <class T>
Var<T> bce_with_logits(const Var<T>& logits, std::span<const T> targets, std::span<const T> weights);

/// Cross-entropy of logits [B, K] against integer labels; class_weights may
/// be empty. Reduction: sum(w_y * l) / sum(w_y).
template <class T>
Var<T> cross_entropy(const Var<T>& logits, std::span<const int> labels,
                     std::span<const T> class_weights);

/// sum(x * r) for a fixed tensor r of equal shape; used to project outputs
/// to a scalar for gradient checks.
template <class T> Var<T> project(const Var<T>& x, const Tensor<T>& r);

}  // namespace emgkey::nn
