#pragma once

// Stateless forward/backward kernels. Activations are [batch, channels,
// width] unless noted; dense layers take [batch, features].

#include <cstddef>
#include <cstdint>
#include <vector>

#include "srcount/nn/tensor.hpp"
#include "srcount/rng.hpp"

namespace srcount::nn {

enum class Mode { train, infer };

namespace ops {

std::size_t conv_output_width(std::size_t width, std::size_t kernel, std::size_t stride, std::size_t padding);

// Cross-correlation. weights [filters, channels, kernel]; bias [filters] or
// empty for no bias.
template <class T>
Tensor<T> conv1d_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias,
                         std::size_t stride, std::size_t padding);

template <class T>
struct Conv1dGrads {
  Tensor<T> input;
  Tensor<T> weights;
  Tensor<T> bias;  // empty when the forward had no bias
};

template <class T>
Conv1dGrads<T> conv1d_backward(const Tensor<T>& input, const Tensor<T>& weights, bool has_bias,
                               std::size_t stride, std::size_t padding, const Tensor<T>& grad_output);

template <class T>
struct BatchNormCache {
  Tensor<T> normalized;     // x_hat
  std::vector<T> inv_std;   // per channel
};

// Running statistics are updated in place in train mode:
// running = (1 - momentum) * running + momentum * batch (unbiased variance).
template <class T>
Tensor<T> batchnorm_forward(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta,
                            Tensor<T>& running_mean, Tensor<T>& running_var, Mode mode, double momentum,
                            double epsilon, BatchNormCache<T>* cache);

template <class T>
struct BatchNormGrads {
  Tensor<T> input;
  Tensor<T> gamma;
  Tensor<T> beta;
};

template <class T>
BatchNormGrads<T> batchnorm_backward(const BatchNormCache<T>& cache, const Tensor<T>& gamma,
                                     const Tensor<T>& grad_output);

template <class T>
Tensor<T> relu_forward(const Tensor<T>& input);
template <class T>
Tensor<T> relu_backward(const Tensor<T>& input, const Tensor<T>& grad_output);

// Pools run along the width axis. argmax receives the flat input index of
// each output's winner (first index on ties).
template <class T>
Tensor<T> maxpool_forward(const Tensor<T>& input, std::size_t width, std::size_t stride,
                          std::vector<std::size_t>* argmax);
template <class T>
Tensor<T> maxpool_backward(const Shape& input_shape, const std::vector<std::size_t>& argmax,
                           const Tensor<T>& grad_output);

template <class T>
Tensor<T> avgpool_forward(const Tensor<T>& input, std::size_t width, std::size_t stride);
template <class T>
Tensor<T> avgpool_backward(const Shape& input_shape, std::size_t width, std::size_t stride,
                           const Tensor<T>& grad_output);

// Inverted dropout: survivors are scaled by 1 / (1 - p) in train mode; the
// mask holds that scale (or 0) per element. Identity in infer mode.
template <class T>
Tensor<T> dropout_forward(const Tensor<T>& input, double p, Mode mode, Rng& rng, std::vector<T>* mask);
template <class T>
Tensor<T> dropout_backward(const std::vector<T>& mask, const Tensor<T>& grad_output);

// input [batch, in], weights [out, in], bias [out].
template <class T>
Tensor<T> dense_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias);

template <class T>
struct DenseGrads {
  Tensor<T> input;
  Tensor<T> weights;
  Tensor<T> bias;
};

template <class T>
DenseGrads<T> dense_backward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& grad_output);

template <class T>
struct LossResult {
  double loss = 0.0;
  Tensor<T> gradient;  // d loss / d logits
};

// Mean categorical cross-entropy of softmax(logits) against one-hot rows.
template <class T>
LossResult<T> softmax_cross_entropy(const Tensor<T>& logits, const Tensor<T>& targets);

template <class T>
Tensor<T> one_hot(const std::vector<std::size_t>& labels, std::size_t num_classes);

template <class T>
Tensor<T> softmax(const Tensor<T>& logits);

}  // namespace ops
}  // namespace srcount::nn
