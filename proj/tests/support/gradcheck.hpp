#pragma once

// Central finite-difference checks for layers in double precision.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "srcount/nn/layers.hpp"
#include "srcount/nn/ops.hpp"
#include "srcount/rng.hpp"

namespace gradcheck {

using srcount::Rng;
using srcount::nn::Layer;
using srcount::nn::LayerSpec;
using srcount::nn::Shape;
using srcount::nn::Tensor;

inline constexpr double kEps = 1e-5;

inline Tensor<double> random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor<double> t(shape);
  for (auto& v : t.values()) v = u(rng);
  return t;
}

// |a - n| / max(|a|, |n|, floor), maximised over elements.
inline double max_rel_error(const std::vector<double>& analytic, const std::vector<double>& numeric,
                            double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double den = std::max({std::abs(analytic[i]), std::abs(numeric[i]), floor});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / den);
  }
  return worst;
}

inline double dot(const Tensor<double>& a, const Tensor<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

struct Result {
  double input = 0.0;   // worst relative error on the input gradient
  double params = 0.0;  // worst relative error over all parameter gradients
  double worst() const { return std::max(input, params); }
};

// Checks layer.backward against the probe loss f(x) = <g, layer.forward(x)>
// with a fixed random upstream gradient g.
inline Result check_layer(Layer<double>& layer, const Tensor<double>& x, Rng& rng) {
  const Tensor<double> y = layer.forward(x);
  const Tensor<double> g = random_tensor(y.shape(), rng);
  std::vector<srcount::nn::NamedTensor<double>> params;
  layer.parameters("", params);
  for (auto& p : params) p.grad->fill(0.0);
  const Tensor<double> dx = layer.backward(g);

  auto probe = [&](const Tensor<double>& in) { return dot(g, layer.forward(in)); };
  Result r;
  {
    Tensor<double> xp = x;
    std::vector<double> num(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double keep = xp[i];
      xp[i] = keep + kEps;
      const double fp = probe(xp);
      xp[i] = keep - kEps;
      const double fm = probe(xp);
      xp[i] = keep;
      num[i] = (fp - fm) / (2 * kEps);
    }
    r.input = max_rel_error(dx.storage(), num);
  }
  for (auto& p : params) {
    const std::vector<double> analytic = p.grad->storage();
    std::vector<double> num(p.value->size());
    for (std::size_t i = 0; i < p.value->size(); ++i) {
      double& w = (*p.value)[i];
      const double keep = w;
      w = keep + kEps;
      const double fp = probe(x);
      w = keep - kEps;
      const double fm = probe(x);
      w = keep;
      num[i] = (fp - fm) / (2 * kEps);
    }
    r.params = std::max(r.params, max_rel_error(analytic, num));
  }
  return r;
}

// Random [batch, channels, width] input whose values stay clear of the
// relu kink and of maxpool ties.
inline Tensor<double> spread_input(const Shape& shape, Rng& rng) {
  Tensor<double> t = random_tensor(shape, rng);
  for (auto& v : t.values()) v = v < 0 ? v - 0.05 : v + 0.05;
  return t;
}

inline std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// One randomly shaped case per call for every layer kind. Returns the worst
// error per kind name.
struct Case {
  std::string kind;
  Result result;
};

inline std::vector<Case> random_cases(Rng& rng) {
  using srcount::nn::make_layer;
  std::vector<Case> out;
  const std::size_t batch = pick(rng, 2, 4);
  const std::size_t channels = pick(rng, 1, 4);
  const std::size_t width = pick(rng, 4, 12);
  const Shape in{channels, width};
  const Shape full{batch, channels, width};
  const std::uint64_t seed = rng();

  {
    const std::size_t kernel = pick(rng, 1, std::min<std::size_t>(5, width));
    const std::size_t padding = pick(rng, 0, 2);
    const std::size_t stride = pick(rng, 1, 3);
    auto spec = LayerSpec::conv1d(pick(rng, 1, 4), kernel, stride, padding, rng() % 2 == 0);
    auto layer = make_layer<double>(spec, in, seed);
    layer->initialize(rng);
    std::vector<srcount::nn::NamedTensor<double>> ps;
    layer->parameters("", ps);
    for (auto& p : ps) *p.value = random_tensor(p.value->shape(), rng);
    out.push_back({"conv1d", check_layer(*layer, random_tensor(full, rng), rng)});
  }
  {
    auto layer = make_layer<double>(LayerSpec::batchnorm(), in, seed);
    std::vector<srcount::nn::NamedTensor<double>> ps;
    layer->parameters("", ps);
    for (auto& p : ps) *p.value = random_tensor(p.value->shape(), rng, 0.5, 1.5);
    out.push_back({"batchnorm", check_layer(*layer, random_tensor(full, rng, -2.0, 2.0), rng)});
  }
  {
    auto layer = make_layer<double>(LayerSpec::relu(), in, seed);
    out.push_back({"relu", check_layer(*layer, spread_input(full, rng), rng)});
  }
  {
    auto layer = make_layer<double>(LayerSpec::maxpool(2, 2), in, seed);
    out.push_back({"maxpool", check_layer(*layer, spread_input(full, rng), rng)});
  }
  {
    const std::size_t pool = pick(rng, 1, std::min<std::size_t>(3, width));
    auto layer = make_layer<double>(LayerSpec::avgpool(pool, pick(rng, 1, 2)), in, seed);
    out.push_back({"avgpool", check_layer(*layer, random_tensor(full, rng), rng)});
    auto global = make_layer<double>(LayerSpec::global_avgpool(), in, seed);
    out.push_back({"global_avgpool", check_layer(*global, random_tensor(full, rng), rng)});
  }
  {
    // The layer draws a new mask per forward, so the check runs on the
    // operator with a replayed stream.
    const double p = std::uniform_real_distribution<double>(0.0, 0.8)(rng);
    const Tensor<double> x = random_tensor(full, rng);
    const Rng stream(rng());
    std::vector<double> mask;
    Rng r0 = stream;
    const auto y = srcount::nn::ops::dropout_forward(x, p, srcount::nn::Mode::train, r0, &mask);
    const auto g = random_tensor(y.shape(), rng);
    const auto dx = srcount::nn::ops::dropout_backward(mask, g);
    auto probe = [&](const Tensor<double>& in) {
      Rng r = stream;
      return dot(g, srcount::nn::ops::dropout_forward(in, p, srcount::nn::Mode::train, r, static_cast<std::vector<double>*>(nullptr)));
    };
    std::vector<double> num(x.size());
    Tensor<double> xp = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double keep = xp[i];
      xp[i] = keep + kEps;
      const double fp = probe(xp);
      xp[i] = keep - kEps;
      const double fm = probe(xp);
      xp[i] = keep;
      num[i] = (fp - fm) / (2 * kEps);
    }
    out.push_back({"dropout", {max_rel_error(dx.storage(), num), 0.0}});
  }
  {
    auto layer = make_layer<double>(LayerSpec::dense(pick(rng, 1, 6)), in, seed);
    layer->initialize(rng);
    std::vector<srcount::nn::NamedTensor<double>> ps;
    layer->parameters("", ps);
    for (auto& p : ps) *p.value = random_tensor(p.value->shape(), rng);
    out.push_back({"dense", check_layer(*layer, random_tensor(full, rng), rng)});
  }
  {
    const bool project = rng() % 2 == 0;
    const std::size_t stride = project ? pick(rng, 1, 2) : 1;
    const std::size_t filters = project ? pick(rng, 1, 4) : channels;
    auto layer = make_layer<double>(LayerSpec::residual_block(filters, stride, project), in, seed);
    layer->initialize(rng);
    std::vector<srcount::nn::NamedTensor<double>> ps;
    layer->parameters("", ps);
    for (auto& p : ps) {
      const bool is_gamma = p.name.find("gamma") != std::string::npos;
      *p.value = is_gamma ? random_tensor(p.value->shape(), rng, 0.5, 1.5) : random_tensor(p.value->shape(), rng);
    }
    out.push_back({"residual_block", check_layer(*layer, random_tensor(full, rng), rng)});
  }
  return out;
}

}  // namespace gradcheck
