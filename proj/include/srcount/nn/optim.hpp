#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "srcount/nn/layers.hpp"
#include "srcount/nn/tensor.hpp"
#include "srcount/rng.hpp"

namespace srcount::nn {

struct TrainConfig {
  double learning_rate = 1e-3;
  double momentum = 0.9;
  bool nesterov = true;
  std::size_t batch_size = 64;
  std::size_t epochs = 100;
  std::uint64_t seed = 1;
  bool deterministic = true;
};

void validate(const TrainConfig& config);

// Fan sizes of a weight tensor: [out, in] or [filters, channels, kernel].
std::pair<std::size_t, std::size_t> fan_in_out(const Shape& shape);

// Uniform on +-sqrt(6 / (fan_in + fan_out)).
template <class T>
Tensor<T> xavier_init(const Shape& shape, Rng& rng);

// Nesterov: v <- mu v - lr g ; p <- p + mu v - lr g.
// Classical momentum: v <- mu v - lr g ; p <- p + v.
template <class T>
void sgd_nesterov_step(std::span<T> params, std::span<const T> grads, std::span<T> velocity,
                       const TrainConfig& config);

template <class T>
class SgdOptimizer {
 public:
  explicit SgdOptimizer(TrainConfig config) : config_(config) {}

  // Velocities are allocated lazily and follow the parameter order.
  void step(std::vector<NamedTensor<T>>& params);
  void reset() { velocity_.clear(); }

 private:
  TrainConfig config_;
  std::vector<std::vector<T>> velocity_;
};

}  // namespace srcount::nn
