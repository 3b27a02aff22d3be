#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "srcount/nn/ops.hpp"
#include "srcount/nn/tensor.hpp"
#include "srcount/rng.hpp"

namespace srcount::nn {

enum class LayerKind { conv1d, batchnorm, relu, maxpool, avgpool, dropout, dense, residual_block };

std::string_view to_string(LayerKind kind);
LayerKind parse_layer_kind(std::string_view name);

// Hyperparameters of one layer. Fields irrelevant to a kind are ignored.
struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  std::size_t filters = 0;   // conv1d, residual_block
  std::size_t kernel = 3;    // conv1d
  std::size_t stride = 1;    // conv1d, residual_block, pools
  std::size_t padding = 0;   // conv1d
  bool bias = true;          // conv1d
  std::size_t pool = 2;      // pool window; 0 means global (whole width)
  double rate = 0.0;         // dropout
  std::size_t units = 0;     // dense
  bool projection = false;   // residual_block
  double bn_momentum = 0.1;
  double bn_epsilon = 1e-5;

  static LayerSpec conv1d(std::size_t filters, std::size_t kernel, std::size_t stride, std::size_t padding,
                          bool bias = true);
  static LayerSpec batchnorm();
  static LayerSpec relu();
  static LayerSpec maxpool(std::size_t pool = 2, std::size_t stride = 2);
  static LayerSpec avgpool(std::size_t pool = 2, std::size_t stride = 2);
  static LayerSpec global_avgpool();
  static LayerSpec dropout(double rate);
  static LayerSpec dense(std::size_t units);
  static LayerSpec residual_block(std::size_t filters, std::size_t stride, bool projection);

  bool operator==(const LayerSpec&) const = default;
};

// Throws DomainError for hyperparameters outside their documented ranges.
void validate(const LayerSpec& spec);

template <class T>
struct Parameter {
  Tensor<T> value;
  Tensor<T> grad;
};

template <class T>
struct NamedTensor {
  std::string name;
  Tensor<T>* value = nullptr;
  Tensor<T>* grad = nullptr;  // null for non-trainable buffers
};

// Per-sample shapes exclude the batch axis: [channels, width] or [features].
template <class T>
class Layer {
 public:
  virtual ~Layer() = default;

  virtual const LayerSpec& spec() const = 0;
  virtual Shape output_shape(const Shape& input) const = 0;

  // Inference-mode forward; never mutates the layer.
  virtual Tensor<T> infer(const Tensor<T>& x) const = 0;
  // Train-mode forward; caches what backward needs.
  virtual Tensor<T> forward(const Tensor<T>& x) = 0;
  virtual Tensor<T> backward(const Tensor<T>& grad_output) = 0;

  virtual void parameters(const std::string& /*prefix*/, std::vector<NamedTensor<T>>& /*out*/) {}
  virtual void buffers(const std::string& /*prefix*/, std::vector<NamedTensor<T>>& /*out*/) {}
  virtual void initialize(Rng& /*rng*/) {}
};

template <class T>
std::unique_ptr<Layer<T>> make_layer(const LayerSpec& spec, const Shape& input_shape, std::uint64_t seed);

template <class T>
class Conv1d final : public Layer<T> {
 public:
  Conv1d(const LayerSpec& spec, std::size_t in_channels);
  const LayerSpec& spec() const override { return spec_; }
  Shape output_shape(const Shape& input) const override;
  Tensor<T> infer(const Tensor<T>& x) const override;
  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad_output) override;
  void parameters(const std::string& prefix, std::vector<NamedTensor<T>>& out) override;
  void initialize(Rng& rng) override;

  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }

 private:
  LayerSpec spec_;
  Parameter<T> weight_;
  Parameter<T> bias_;
  Tensor<T> input_;
};

template <class T>
class BatchNorm final : public Layer<T> {
 public:
  BatchNorm(const LayerSpec& spec, std::size_t channels);
  const LayerSpec& spec() const override { return spec_; }
  Shape output_shape(const Shape& input) const override { return input; }
  Tensor<T> infer(const Tensor<T>& x) const override;
  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad_output) override;
  void parameters(const std::string& prefix, std::vector<NamedTensor<T>>& out) override;
  void buffers(const std::string& prefix, std::vector<NamedTensor<T>>& out) override;
  void initialize(Rng& rng) override;

  Parameter<T>& gamma() { return gamma_; }
  Parameter<T>& beta() { return beta_; }

 private:
  LayerSpec spec_;
  Parameter<T> gamma_;
  Parameter<T> beta_;
  Tensor<T> running_mean_;
  Tensor<T> running_var_;
  ops::BatchNormCache<T> cache_;
};

template <class T>
class Relu final : public Layer<T> {
 public:
  Relu() : spec_(LayerSpec::relu()) {}
  const LayerSpec& spec() const override { return spec_; }
  Shape output_shape(const Shape& input) const override { return input; }
  Tensor<T> infer(const Tensor<T>& x) const override { return ops::relu_forward(x); }
  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad_output) override { return ops::relu_backward(input_, grad_output); }

 private:
  LayerSpec spec_;
  Tensor<T> input_;
};

template <class T>
class MaxPool final : public Layer<T> {
 public:
  explicit MaxPool(const LayerSpec& spec) : spec_(spec) {}
  const LayerSpec& spec() const override { return spec_; }
  Shape output_shape(const Shape& input) const override;
  Tensor<T> infer(const Tensor<T>& x) const override;
  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad_output) override;

 private:
  LayerSpec spec_;
  Shape input_shape_;
  std::vector<std::size_t> argmax_;
};

template <class T>
class AvgPool final : public Layer<T> {
 public:
  explicit AvgPool(const LayerSpec& spec) : spec_(spec) {}
  const LayerSpec& spec() const override { return spec_; }
  Shape output_shape(const Shape& input) const override;
  Tensor<T> infer(const Tensor<T>& x) const override;
  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad_output) override;

 private:
  std::size_t window(std::size_t width) const { return spec_.pool == 0 ? width : spec_.pool; }
  std::size_t step(std::size_t width) const { return spec_.pool == 0 ? width : spec_.stride; }

  LayerSpec spec_;
  Shape input_shape_;
};

template <class T>
class Dropout final : public Layer<T> {
 public:
  Dropout(const LayerSpec& spec, std::uint64_t seed) : spec_(spec), rng_(seed) {}
  const LayerSpec& spec() const override { return spec_; }
  Shape output_shape(const Shape& input) const override { return input; }
  Tensor<T> infer(const Tensor<T>& x) const override { return x; }
  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad_output) override { return ops::dropout_backward(mask_, grad_output); }

 private:
  LayerSpec spec_;
  Rng rng_;
  std::vector<T> mask_;
};

// Fully connected layer; flattens everything after the batch axis.
template <class T>
class Dense final : public Layer<T> {
 public:
  Dense(const LayerSpec& spec, std::size_t in_features);
  const LayerSpec& spec() const override { return spec_; }
  Shape output_shape(const Shape& input) const override;
  Tensor<T> infer(const Tensor<T>& x) const override;
  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad_output) override;
  void parameters(const std::string& prefix, std::vector<NamedTensor<T>>& out) override;
  void initialize(Rng& rng) override;

  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }

 private:
  LayerSpec spec_;
  Parameter<T> weight_;
  Parameter<T> bias_;
  Shape input_shape_;
  Tensor<T> input_;
};

// Basic two-convolution residual block: y = relu(F(x) + shortcut(x)) with
// F = conv3-bn-relu-conv3-bn and shortcut either identity or a strided
// width-1 projection convolution followed by batch norm.
template <class T>
class ResidualBlock final : public Layer<T> {
 public:
  ResidualBlock(const LayerSpec& spec, std::size_t in_channels);
  const LayerSpec& spec() const override { return spec_; }
  Shape output_shape(const Shape& input) const override;
  Tensor<T> infer(const Tensor<T>& x) const override;
  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad_output) override;
  void parameters(const std::string& prefix, std::vector<NamedTensor<T>>& out) override;
  void buffers(const std::string& prefix, std::vector<NamedTensor<T>>& out) override;
  void initialize(Rng& rng) override;

  Conv1d<T>& conv1() { return conv1_; }
  Conv1d<T>& conv2() { return conv2_; }
  BatchNorm<T>& bn2() { return bn2_; }
  Conv1d<T>* projection() { return proj_conv_.get(); }
  BatchNorm<T>* projection_bn() { return proj_bn_.get(); }

 private:
  LayerSpec spec_;
  Conv1d<T> conv1_;
  BatchNorm<T> bn1_;
  Relu<T> relu1_;
  Conv1d<T> conv2_;
  BatchNorm<T> bn2_;
  std::unique_ptr<Conv1d<T>> proj_conv_;
  std::unique_ptr<BatchNorm<T>> proj_bn_;
  Tensor<T> sum_;
};

// Ordered layer stack with fixed per-sample input shape.
template <class T>
class Sequential {
 public:
  Sequential() = default;
  Sequential(Shape input_shape, const std::vector<LayerSpec>& specs, std::uint64_t seed);

  const Shape& input_shape() const noexcept { return input_shape_; }
  Shape output_shape() const;
  std::size_t size() const noexcept { return layers_.size(); }
  Layer<T>& layer(std::size_t i) { return *layers_.at(i); }
  const Layer<T>& layer(std::size_t i) const { return *layers_.at(i); }
  std::vector<LayerSpec> specs() const;

  Tensor<T> infer(const Tensor<T>& x) const;
  Tensor<T> forward(const Tensor<T>& x);
  Tensor<T> backward(const Tensor<T>& grad_output);

  // Stable names of the form "<index>.<sub>.<tensor>".
  std::vector<NamedTensor<T>> parameters();
  std::vector<NamedTensor<T>> buffers();
  // Parameters followed by buffers: everything a checkpoint stores.
  std::vector<NamedTensor<T>> state();

  void initialize(Rng& rng);
  void zero_grad();
  std::size_t parameter_count();

 private:
  void check_input(const Tensor<T>& x) const;

  Shape input_shape_;
  std::vector<std::unique_ptr<Layer<T>>> layers_;
};

}  // namespace srcount::nn
