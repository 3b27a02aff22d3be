#include "srcount/nn/optim.hpp"

#include <cmath>

namespace srcount::nn {

void validate(const TrainConfig& c) {
  if (!(c.learning_rate > 0.0)) throw ConfigError("train.learning_rate: must be > 0");
  if (!(c.momentum >= 0.0 && c.momentum < 1.0)) throw ConfigError("train.momentum: must lie in [0, 1)");
  if (c.batch_size < 1) throw ConfigError("train.batch_size: must be >= 1");
}

std::pair<std::size_t, std::size_t> fan_in_out(const Shape& shape) {
  if (shape.size() == 2) return {shape[1], shape[0]};
  if (shape.size() == 3) return {shape[1] * shape[2], shape[0] * shape[2]};
  if (shape.size() == 1) return {shape[0], shape[0]};
  throw ShapeError("xavier init supports rank 1-3 weights, got " + to_string(shape));
}

template <class T>
Tensor<T> xavier_init(const Shape& shape, Rng& rng) {
  const auto [fan_in, fan_out] = fan_in_out(shape);
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> uni(-bound, bound);
  Tensor<T> t(shape);
  for (auto& v : t.values()) v = static_cast<T>(uni(rng));
  return t;
}

template <class T>
void sgd_nesterov_step(std::span<T> params, std::span<const T> grads, std::span<T> velocity,
                       const TrainConfig& config) {
  if (params.size() != grads.size() || params.size() != velocity.size()) {
    throw ShapeError("optimizer step needs equally sized parameters, gradients and velocities");
  }
  const T mu = static_cast<T>(config.momentum);
  const T lr = static_cast<T>(config.learning_rate);
  if (config.nesterov) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      velocity[i] = mu * velocity[i] - lr * grads[i];
      params[i] += mu * velocity[i] - lr * grads[i];
    }
  } else {
    for (std::size_t i = 0; i < params.size(); ++i) {
      velocity[i] = mu * velocity[i] - lr * grads[i];
      params[i] += velocity[i];
    }
  }
}

template <class T>
void SgdOptimizer<T>::step(std::vector<NamedTensor<T>>& params) {
  if (velocity_.size() != params.size()) {
    velocity_.clear();
    for (const auto& p : params) velocity_.emplace_back(p.value->size(), T(0));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    sgd_nesterov_step<T>(params[i].value->values(), params[i].grad->values(), velocity_[i], config_);
  }
}

template Tensor<float> xavier_init<float>(const Shape&, Rng&);
template Tensor<double> xavier_init<double>(const Shape&, Rng&);
template void sgd_nesterov_step<float>(std::span<float>, std::span<const float>, std::span<float>, const TrainConfig&);
template void sgd_nesterov_step<double>(std::span<double>, std::span<const double>, std::span<double>,
                                        const TrainConfig&);
template class SgdOptimizer<float>;
template class SgdOptimizer<double>;

}  // namespace srcount::nn
