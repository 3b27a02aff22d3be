#include "srcount/nn/layers.hpp"

#include <string>

#include "srcount/nn/optim.hpp"

namespace srcount::nn {

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv1d: return "conv1d";
    case LayerKind::batchnorm: return "batchnorm";
    case LayerKind::relu: return "relu";
    case LayerKind::maxpool: return "maxpool";
    case LayerKind::avgpool: return "avgpool";
    case LayerKind::dropout: return "dropout";
    case LayerKind::dense: return "dense";
    case LayerKind::residual_block: return "residual_block";
  }
  return "unknown";
}

LayerKind parse_layer_kind(std::string_view name) {
  for (auto k : {LayerKind::conv1d, LayerKind::batchnorm, LayerKind::relu, LayerKind::maxpool, LayerKind::avgpool,
                 LayerKind::dropout, LayerKind::dense, LayerKind::residual_block}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown layer kind '" + std::string(name) + "'");
}

LayerSpec LayerSpec::conv1d(std::size_t filters, std::size_t kernel, std::size_t stride, std::size_t padding,
                            bool bias) {
  LayerSpec s;
  s.kind = LayerKind::conv1d;
  s.filters = filters;
  s.kernel = kernel;
  s.stride = stride;
  s.padding = padding;
  s.bias = bias;
  return s;
}

LayerSpec LayerSpec::batchnorm() {
  LayerSpec s;
  s.kind = LayerKind::batchnorm;
  return s;
}

LayerSpec LayerSpec::relu() { return LayerSpec{}; }

LayerSpec LayerSpec::maxpool(std::size_t pool, std::size_t stride) {
  LayerSpec s;
  s.kind = LayerKind::maxpool;
  s.pool = pool;
  s.stride = stride;
  return s;
}

LayerSpec LayerSpec::avgpool(std::size_t pool, std::size_t stride) {
  LayerSpec s;
  s.kind = LayerKind::avgpool;
  s.pool = pool;
  s.stride = stride;
  return s;
}

LayerSpec LayerSpec::global_avgpool() { return avgpool(0, 1); }

LayerSpec LayerSpec::dropout(double rate) {
  LayerSpec s;
  s.kind = LayerKind::dropout;
  s.rate = rate;
  return s;
}

LayerSpec LayerSpec::dense(std::size_t units) {
  LayerSpec s;
  s.kind = LayerKind::dense;
  s.units = units;
  return s;
}

LayerSpec LayerSpec::residual_block(std::size_t filters, std::size_t stride, bool projection) {
  LayerSpec s;
  s.kind = LayerKind::residual_block;
  s.filters = filters;
  s.stride = stride;
  s.kernel = 3;
  s.padding = 1;
  s.bias = false;
  s.projection = projection;
  return s;
}

void validate(const LayerSpec& s) {
  switch (s.kind) {
    case LayerKind::conv1d:
      if (s.filters == 0 || s.kernel == 0 || s.stride == 0) throw DomainError("conv1d needs filters, kernel, stride >= 1");
      break;
    case LayerKind::maxpool:
      if (s.pool == 0 || s.stride == 0) throw DomainError("maxpool needs pool and stride >= 1");
      break;
    case LayerKind::avgpool:
      if (s.pool != 0 && s.stride == 0) throw DomainError("avgpool needs stride >= 1");
      break;
    case LayerKind::dropout:
      if (!(s.rate >= 0.0 && s.rate < 1.0)) throw DomainError("dropout rate must lie in [0, 1)");
      break;
    case LayerKind::dense:
      if (s.units == 0) throw DomainError("dense layer needs at least one unit");
      break;
    case LayerKind::residual_block:
      if (s.filters == 0 || s.stride == 0) throw DomainError("residual block needs filters and stride >= 1");
      break;
    case LayerKind::batchnorm:
    case LayerKind::relu:
      break;
  }
  if (!(s.bn_momentum >= 0.0 && s.bn_momentum <= 1.0) || !(s.bn_epsilon > 0.0)) {
    throw DomainError("batch-norm momentum must lie in [0, 1] and epsilon be positive");
  }
}

namespace {

LayerSpec batchnorm_like(const LayerSpec& parent) {
  LayerSpec s = LayerSpec::batchnorm();
  s.bn_momentum = parent.bn_momentum;
  s.bn_epsilon = parent.bn_epsilon;
  return s;
}

void require_channels_width(const Shape& input, std::string_view what) {
  if (input.size() != 2) {
    throw ShapeError(std::string(what) + " expects a [channels, width] input, got " + to_string(input));
  }
}

}  // namespace

// ---- Conv1d ----

template <class T>
Conv1d<T>::Conv1d(const LayerSpec& spec, std::size_t in_channels) : spec_(spec) {
  weight_.value = Tensor<T>({spec.filters, in_channels, spec.kernel});
  weight_.grad = Tensor<T>(weight_.value.shape());
  if (spec.bias) {
    bias_.value = Tensor<T>({spec.filters});
    bias_.grad = Tensor<T>({spec.filters});
  }
}

template <class T>
Shape Conv1d<T>::output_shape(const Shape& input) const {
  require_channels_width(input, "conv1d");
  if (input[0] != weight_.value.dim(1)) throw ShapeError("conv1d input channel count mismatch");
  return {spec_.filters, ops::conv_output_width(input[1], spec_.kernel, spec_.stride, spec_.padding)};
}

template <class T>
Tensor<T> Conv1d<T>::infer(const Tensor<T>& x) const {
  return ops::conv1d_forward(x, weight_.value, bias_.value, spec_.stride, spec_.padding);
}

template <class T>
Tensor<T> Conv1d<T>::forward(const Tensor<T>& x) {
  input_ = x;
  return infer(x);
}

template <class T>
Tensor<T> Conv1d<T>::backward(const Tensor<T>& grad_output) {
  auto g = ops::conv1d_backward(input_, weight_.value, spec_.bias, spec_.stride, spec_.padding, grad_output);
  for (std::size_t i = 0; i < g.weights.size(); ++i) weight_.grad[i] += g.weights[i];
  if (spec_.bias) {
    for (std::size_t i = 0; i < g.bias.size(); ++i) bias_.grad[i] += g.bias[i];
  }
  return std::move(g.input);
}

template <class T>
void Conv1d<T>::parameters(const std::string& prefix, std::vector<NamedTensor<T>>& out) {
  out.push_back({prefix + "weight", &weight_.value, &weight_.grad});
  if (spec_.bias) out.push_back({prefix + "bias", &bias_.value, &bias_.grad});
}

template <class T>
void Conv1d<T>::initialize(Rng& rng) {
  weight_.value = xavier_init<T>(weight_.value.shape(), rng);
  bias_.value.fill(T(0));
}

// ---- BatchNorm ----

template <class T>
BatchNorm<T>::BatchNorm(const LayerSpec& spec, std::size_t channels)
    : spec_(spec),
      gamma_{Tensor<T>({channels}, T(1)), Tensor<T>({channels})},
      beta_{Tensor<T>({channels}), Tensor<T>({channels})},
      running_mean_({channels}),
      running_var_({channels}, T(1)) {}

template <class T>
Tensor<T> BatchNorm<T>::infer(const Tensor<T>& x) const {
  Tensor<T> mean = running_mean_;
  Tensor<T> var = running_var_;
  return ops::batchnorm_forward(x, gamma_.value, beta_.value, mean, var, Mode::infer, spec_.bn_momentum,
                                spec_.bn_epsilon, static_cast<ops::BatchNormCache<T>*>(nullptr));
}

template <class T>
Tensor<T> BatchNorm<T>::forward(const Tensor<T>& x) {
  return ops::batchnorm_forward(x, gamma_.value, beta_.value, running_mean_, running_var_, Mode::train,
                                spec_.bn_momentum, spec_.bn_epsilon, &cache_);
}

template <class T>
Tensor<T> BatchNorm<T>::backward(const Tensor<T>& grad_output) {
  auto g = ops::batchnorm_backward(cache_, gamma_.value, grad_output);
  for (std::size_t i = 0; i < g.gamma.size(); ++i) {
    gamma_.grad[i] += g.gamma[i];
    beta_.grad[i] += g.beta[i];
  }
  return std::move(g.input);
}

template <class T>
void BatchNorm<T>::parameters(const std::string& prefix, std::vector<NamedTensor<T>>& out) {
  out.push_back({prefix + "gamma", &gamma_.value, &gamma_.grad});
  out.push_back({prefix + "beta", &beta_.value, &beta_.grad});
}

template <class T>
void BatchNorm<T>::buffers(const std::string& prefix, std::vector<NamedTensor<T>>& out) {
  out.push_back({prefix + "running_mean", &running_mean_, nullptr});
  out.push_back({prefix + "running_var", &running_var_, nullptr});
}

template <class T>
void BatchNorm<T>::initialize(Rng&) {
  gamma_.value.fill(T(1));
  beta_.value.fill(T(0));
  running_mean_.fill(T(0));
  running_var_.fill(T(1));
}

// ---- Relu ----

template <class T>
Tensor<T> Relu<T>::forward(const Tensor<T>& x) {
  input_ = x;
  return ops::relu_forward(x);
}

// ---- Pools ----

template <class T>
Shape MaxPool<T>::output_shape(const Shape& input) const {
  require_channels_width(input, "maxpool");
  if (input[1] < spec_.pool) throw ShapeError("maxpool window exceeds input width " + std::to_string(input[1]));
  return {input[0], (input[1] - spec_.pool) / spec_.stride + 1};
}

template <class T>
Tensor<T> MaxPool<T>::infer(const Tensor<T>& x) const {
  return ops::maxpool_forward(x, spec_.pool, spec_.stride, nullptr);
}

template <class T>
Tensor<T> MaxPool<T>::forward(const Tensor<T>& x) {
  input_shape_ = x.shape();
  return ops::maxpool_forward(x, spec_.pool, spec_.stride, &argmax_);
}

template <class T>
Tensor<T> MaxPool<T>::backward(const Tensor<T>& grad_output) {
  return ops::maxpool_backward(input_shape_, argmax_, grad_output);
}

template <class T>
Shape AvgPool<T>::output_shape(const Shape& input) const {
  require_channels_width(input, "avgpool");
  const std::size_t w = window(input[1]);
  if (input[1] < w || w == 0) throw ShapeError("avgpool window exceeds input width " + std::to_string(input[1]));
  return {input[0], (input[1] - w) / step(input[1]) + 1};
}

template <class T>
Tensor<T> AvgPool<T>::infer(const Tensor<T>& x) const {
  return ops::avgpool_forward(x, window(x.dim(2)), step(x.dim(2)));
}

template <class T>
Tensor<T> AvgPool<T>::forward(const Tensor<T>& x) {
  input_shape_ = x.shape();
  return infer(x);
}

template <class T>
Tensor<T> AvgPool<T>::backward(const Tensor<T>& grad_output) {
  const std::size_t w = input_shape_.at(2);
  return ops::avgpool_backward(input_shape_, window(w), step(w), grad_output);
}

// ---- Dropout ----

template <class T>
Tensor<T> Dropout<T>::forward(const Tensor<T>& x) {
  return ops::dropout_forward(x, spec_.rate, Mode::train, rng_, &mask_);
}

// ---- Dense ----

template <class T>
Dense<T>::Dense(const LayerSpec& spec, std::size_t in_features) : spec_(spec) {
  weight_.value = Tensor<T>({spec.units, in_features});
  weight_.grad = Tensor<T>(weight_.value.shape());
  bias_.value = Tensor<T>({spec.units});
  bias_.grad = Tensor<T>({spec.units});
}

template <class T>
Shape Dense<T>::output_shape(const Shape& input) const {
  if (element_count(input) != weight_.value.dim(1)) {
    throw ShapeError("dense layer expects " + std::to_string(weight_.value.dim(1)) + " inputs, got " +
                     std::to_string(element_count(input)));
  }
  return {spec_.units};
}

template <class T>
Tensor<T> Dense<T>::infer(const Tensor<T>& x) const {
  const std::size_t batch = x.dim(0);
  return ops::dense_forward(x.reshaped({batch, x.size() / std::max<std::size_t>(batch, 1)}), weight_.value,
                            bias_.value);
}

template <class T>
Tensor<T> Dense<T>::forward(const Tensor<T>& x) {
  input_shape_ = x.shape();
  const std::size_t batch = x.dim(0);
  input_ = x.reshaped({batch, x.size() / std::max<std::size_t>(batch, 1)});
  return ops::dense_forward(input_, weight_.value, bias_.value);
}

template <class T>
Tensor<T> Dense<T>::backward(const Tensor<T>& grad_output) {
  auto g = ops::dense_backward(input_, weight_.value, grad_output);
  for (std::size_t i = 0; i < g.weights.size(); ++i) weight_.grad[i] += g.weights[i];
  for (std::size_t i = 0; i < g.bias.size(); ++i) bias_.grad[i] += g.bias[i];
  return std::move(g.input).reshaped(input_shape_);
}

template <class T>
void Dense<T>::parameters(const std::string& prefix, std::vector<NamedTensor<T>>& out) {
  out.push_back({prefix + "weight", &weight_.value, &weight_.grad});
  out.push_back({prefix + "bias", &bias_.value, &bias_.grad});
}

template <class T>
void Dense<T>::initialize(Rng& rng) {
  weight_.value = xavier_init<T>(weight_.value.shape(), rng);
  bias_.value.fill(T(0));
}

// ---- ResidualBlock ----

template <class T>
ResidualBlock<T>::ResidualBlock(const LayerSpec& spec, std::size_t in_channels)
    : spec_(spec),
      conv1_(LayerSpec::conv1d(spec.filters, 3, spec.stride, 1, false), in_channels),
      bn1_(batchnorm_like(spec), spec.filters),
      conv2_(LayerSpec::conv1d(spec.filters, 3, 1, 1, false), spec.filters),
      bn2_(batchnorm_like(spec), spec.filters) {
  const bool changes_shape = in_channels != spec.filters || spec.stride != 1;
  if (changes_shape && !spec.projection) {
    throw ShapeError("residual block changes dimensions (" + std::to_string(in_channels) + " -> " +
                     std::to_string(spec.filters) + " channels, stride " + std::to_string(spec.stride) +
                     ") without a projection shortcut");
  }
  if (spec.projection) {
    proj_conv_ = std::make_unique<Conv1d<T>>(LayerSpec::conv1d(spec.filters, 1, spec.stride, 0, false), in_channels);
    proj_bn_ = std::make_unique<BatchNorm<T>>(batchnorm_like(spec), spec.filters);
  }
}

template <class T>
Shape ResidualBlock<T>::output_shape(const Shape& input) const {
  const Shape a = conv1_.output_shape(input);
  const Shape b = conv2_.output_shape(a);
  if (proj_conv_ && proj_conv_->output_shape(input) != b) throw ShapeError("residual shortcut width mismatch");
  if (!proj_conv_ && input != b) throw ShapeError("residual identity shortcut shape mismatch");
  return b;
}

template <class T>
Tensor<T> ResidualBlock<T>::infer(const Tensor<T>& x) const {
  Tensor<T> f = bn2_.infer(conv2_.infer(relu1_.infer(bn1_.infer(conv1_.infer(x)))));
  const Tensor<T> shortcut = proj_conv_ ? proj_bn_->infer(proj_conv_->infer(x)) : x;
  for (std::size_t i = 0; i < f.size(); ++i) f[i] += shortcut[i];
  return ops::relu_forward(f);
}

template <class T>
Tensor<T> ResidualBlock<T>::forward(const Tensor<T>& x) {
  Tensor<T> f = bn2_.forward(conv2_.forward(relu1_.forward(bn1_.forward(conv1_.forward(x)))));
  if (proj_conv_) {
    const Tensor<T> shortcut = proj_bn_->forward(proj_conv_->forward(x));
    for (std::size_t i = 0; i < f.size(); ++i) f[i] += shortcut[i];
  } else {
    for (std::size_t i = 0; i < f.size(); ++i) f[i] += x[i];
  }
  sum_ = std::move(f);
  return ops::relu_forward(sum_);
}

template <class T>
Tensor<T> ResidualBlock<T>::backward(const Tensor<T>& grad_output) {
  const Tensor<T> d_sum = ops::relu_backward(sum_, grad_output);
  Tensor<T> dx = conv1_.backward(bn1_.backward(relu1_.backward(conv2_.backward(bn2_.backward(d_sum)))));
  if (proj_conv_) {
    const Tensor<T> ds = proj_conv_->backward(proj_bn_->backward(d_sum));
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += ds[i];
  } else {
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += d_sum[i];
  }
  return dx;
}

template <class T>
void ResidualBlock<T>::parameters(const std::string& prefix, std::vector<NamedTensor<T>>& out) {
  conv1_.parameters(prefix + "conv1.", out);
  bn1_.parameters(prefix + "bn1.", out);
  conv2_.parameters(prefix + "conv2.", out);
  bn2_.parameters(prefix + "bn2.", out);
  if (proj_conv_) {
    proj_conv_->parameters(prefix + "proj.", out);
    proj_bn_->parameters(prefix + "proj_bn.", out);
  }
}

template <class T>
void ResidualBlock<T>::buffers(const std::string& prefix, std::vector<NamedTensor<T>>& out) {
  bn1_.buffers(prefix + "bn1.", out);
  bn2_.buffers(prefix + "bn2.", out);
  if (proj_bn_) proj_bn_->buffers(prefix + "proj_bn.", out);
}

template <class T>
void ResidualBlock<T>::initialize(Rng& rng) {
  conv1_.initialize(rng);
  bn1_.initialize(rng);
  conv2_.initialize(rng);
  bn2_.initialize(rng);
  if (proj_conv_) {
    proj_conv_->initialize(rng);
    proj_bn_->initialize(rng);
  }
}

// ---- factory / Sequential ----

template <class T>
std::unique_ptr<Layer<T>> make_layer(const LayerSpec& spec, const Shape& input_shape, std::uint64_t seed) {
  validate(spec);
  auto channels = [&] {
    require_channels_width(input_shape, to_string(spec.kind));
    return input_shape[0];
  };
  std::unique_ptr<Layer<T>> layer;
  switch (spec.kind) {
    case LayerKind::conv1d: layer = std::make_unique<Conv1d<T>>(spec, channels()); break;
    case LayerKind::batchnorm:
      if (input_shape.empty()) throw ShapeError("batchnorm needs a channel axis");
      layer = std::make_unique<BatchNorm<T>>(spec, input_shape[0]);
      break;
    case LayerKind::relu: layer = std::make_unique<Relu<T>>(); break;
    case LayerKind::maxpool: layer = std::make_unique<MaxPool<T>>(spec); break;
    case LayerKind::avgpool: layer = std::make_unique<AvgPool<T>>(spec); break;
    case LayerKind::dropout: layer = std::make_unique<Dropout<T>>(spec, seed); break;
    case LayerKind::dense: layer = std::make_unique<Dense<T>>(spec, element_count(input_shape)); break;
    case LayerKind::residual_block: layer = std::make_unique<ResidualBlock<T>>(spec, channels()); break;
  }
  // Surfaces width collapse and channel mismatches at build time.
  (void)layer->output_shape(input_shape);
  return layer;
}

template <class T>
Sequential<T>::Sequential(Shape input_shape, const std::vector<LayerSpec>& specs, std::uint64_t seed)
    : input_shape_(std::move(input_shape)) {
  Shape shape = input_shape_;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    layers_.push_back(make_layer<T>(specs[i], shape, splitmix64(seed ^ splitmix64(i))));
    shape = layers_.back()->output_shape(shape);
    if (element_count(shape) == 0) throw ShapeError("layer " + std::to_string(i) + " collapses the width to 0");
  }
}

template <class T>
Shape Sequential<T>::output_shape() const {
  Shape s = input_shape_;
  for (const auto& l : layers_) s = l->output_shape(s);
  return s;
}

template <class T>
std::vector<LayerSpec> Sequential<T>::specs() const {
  std::vector<LayerSpec> out;
  for (const auto& l : layers_) out.push_back(l->spec());
  return out;
}

template <class T>
void Sequential<T>::check_input(const Tensor<T>& x) const {
  if (x.rank() != input_shape_.size() + 1 || !std::equal(input_shape_.begin(), input_shape_.end(), x.shape().begin() + 1)) {
    throw DataError("network expects per-sample input " + to_string(input_shape_) + ", got batch " + to_string(x.shape()));
  }
}

template <class T>
Tensor<T> Sequential<T>::infer(const Tensor<T>& x) const {
  check_input(x);
  Tensor<T> h = x;
  for (const auto& l : layers_) h = l->infer(h);
  return h;
}

template <class T>
Tensor<T> Sequential<T>::forward(const Tensor<T>& x) {
  check_input(x);
  Tensor<T> h = x;
  for (auto& l : layers_) h = l->forward(h);
  return h;
}

template <class T>
Tensor<T> Sequential<T>::backward(const Tensor<T>& grad_output) {
  Tensor<T> g = grad_output;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

template <class T>
std::vector<NamedTensor<T>> Sequential<T>::parameters() {
  std::vector<NamedTensor<T>> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i]->parameters(std::to_string(i) + ".", out);
  return out;
}

template <class T>
std::vector<NamedTensor<T>> Sequential<T>::buffers() {
  std::vector<NamedTensor<T>> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i]->buffers(std::to_string(i) + ".", out);
  return out;
}

template <class T>
std::vector<NamedTensor<T>> Sequential<T>::state() {
  auto out = parameters();
  auto buf = buffers();
  out.insert(out.end(), buf.begin(), buf.end());
  return out;
}

template <class T>
void Sequential<T>::initialize(Rng& rng) {
  for (auto& l : layers_) l->initialize(rng);
}

template <class T>
void Sequential<T>::zero_grad() {
  for (auto& p : parameters()) p.grad->fill(T(0));
}

template <class T>
std::size_t Sequential<T>::parameter_count() {
  std::size_t n = 0;
  for (auto& p : parameters()) n += p.value->size();
  return n;
}

#define SRCOUNT_INSTANTIATE_LAYERS(T)                                                               \
  template class Conv1d<T>;                                                                         \
  template class BatchNorm<T>;                                                                      \
  template class Relu<T>;                                                                           \
  template class MaxPool<T>;                                                                        \
  template class AvgPool<T>;                                                                        \
  template class Dropout<T>;                                                                        \
  template class Dense<T>;                                                                          \
  template class ResidualBlock<T>;                                                                  \
  template class Sequential<T>;                                                                     \
  template std::unique_ptr<Layer<T>> make_layer<T>(const LayerSpec&, const Shape&, std::uint64_t);

SRCOUNT_INSTANTIATE_LAYERS(float)
SRCOUNT_INSTANTIATE_LAYERS(double)

}  // namespace srcount::nn
