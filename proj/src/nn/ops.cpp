#include "srcount/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace srcount::nn::ops {

namespace {

template <class T>
using RowMajor = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void require_rank3(const Shape& s, const char* what) {
  if (s.size() != 3) throw ShapeError(std::string(what) + " expects [batch, channels, width], got " + to_string(s));
}

// Output positions o with 0 <= o * stride + k - padding < width.
struct ValidRange {
  std::size_t lo = 0;
  std::size_t hi = 0;  // exclusive
};

ValidRange valid_outputs(std::size_t k, std::size_t stride, std::size_t padding, std::size_t width,
                         std::size_t out_width) {
  ValidRange r;
  r.lo = k >= padding ? 0 : (padding - k + stride - 1) / stride;
  if (width + padding <= k) return {0, 0};
  r.hi = std::min(out_width, (width + padding - k - 1) / stride + 1);
  if (r.lo > r.hi) r.lo = r.hi;
  return r;
}

// cols[(c * K + k), (b * Wo + o)] = x[b, c, o * stride + k - padding] (zero outside).
template <class T>
void im2col(const T* x, std::size_t batch, std::size_t channels, std::size_t width, std::size_t kernel,
            std::size_t stride, std::size_t padding, std::size_t out_width, T* cols) {
  const std::size_t ncol = batch * out_width;
  for (std::size_t k = 0; k < kernel; ++k) {
    const ValidRange vr = valid_outputs(k, stride, padding, width, out_width);
    for (std::size_t c = 0; c < channels; ++c) {
      T* row = cols + (c * kernel + k) * ncol;
      for (std::size_t b = 0; b < batch; ++b) {
        const T* xs = x + (b * channels + c) * width;
        T* dst = row + b * out_width;
        std::fill(dst, dst + vr.lo, T(0));
        const std::size_t first = vr.lo * stride + k - padding;
        if (stride == 1) {
          std::copy(xs + first, xs + first + (vr.hi - vr.lo), dst + vr.lo);
        } else {
          for (std::size_t o = vr.lo; o < vr.hi; ++o) dst[o] = xs[first + (o - vr.lo) * stride];
        }
        std::fill(dst + vr.hi, dst + out_width, T(0));
      }
    }
  }
}

template <class T>
void col2im(const T* cols, std::size_t batch, std::size_t channels, std::size_t width, std::size_t kernel,
            std::size_t stride, std::size_t padding, std::size_t out_width, T* dx) {
  const std::size_t ncol = batch * out_width;
  for (std::size_t k = 0; k < kernel; ++k) {
    const ValidRange vr = valid_outputs(k, stride, padding, width, out_width);
    for (std::size_t c = 0; c < channels; ++c) {
      const T* row = cols + (c * kernel + k) * ncol;
      for (std::size_t b = 0; b < batch; ++b) {
        T* xs = dx + (b * channels + c) * width;
        const T* src = row + b * out_width;
        const std::size_t first = vr.lo * stride + k - padding;
        for (std::size_t o = vr.lo; o < vr.hi; ++o) xs[first + (o - vr.lo) * stride] += src[o];
      }
    }
  }
}

}  // namespace

std::size_t conv_output_width(std::size_t width, std::size_t kernel, std::size_t stride, std::size_t padding) {
  if (stride == 0) throw ShapeError("stride must be positive");
  if (kernel == 0 || kernel > width + 2 * padding) {
    throw ShapeError("kernel width " + std::to_string(kernel) + " exceeds padded width " +
                     std::to_string(width + 2 * padding));
  }
  return (width + 2 * padding - kernel) / stride + 1;
}

template <class T>
Tensor<T> conv1d_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias,
                         std::size_t stride, std::size_t padding) {
  require_rank3(input.shape(), "conv1d");
  if (weights.rank() != 3) throw ShapeError("conv1d weights must be [filters, channels, kernel]");
  const std::size_t batch = input.dim(0), channels = input.dim(1), width = input.dim(2);
  const std::size_t filters = weights.dim(0), kernel = weights.dim(2);
  if (weights.dim(1) != channels) {
    throw ShapeError("conv1d weights expect " + std::to_string(weights.dim(1)) + " channels, input has " +
                     std::to_string(channels));
  }
  if (!bias.empty() && bias.size() != filters) throw ShapeError("conv1d bias length must equal filters");
  const std::size_t out_width = conv_output_width(width, kernel, stride, padding);
  const std::size_t rows = channels * kernel;
  const std::size_t ncol = batch * out_width;

  std::vector<T> cols(rows * ncol);
  im2col(input.data(), batch, channels, width, kernel, stride, padding, out_width, cols.data());

  Eigen::Map<const RowMajor<T>> wm(weights.data(), static_cast<Eigen::Index>(filters), static_cast<Eigen::Index>(rows));
  Eigen::Map<const RowMajor<T>> cm(cols.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(ncol));
  RowMajor<T> out(static_cast<Eigen::Index>(filters), static_cast<Eigen::Index>(ncol));
  out.noalias() = wm * cm;

  Tensor<T> y({batch, filters, out_width});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t f = 0; f < filters; ++f) {
      const T bf = bias.empty() ? T(0) : bias[f];
      const T* src = out.data() + f * ncol + b * out_width;
      T* dst = y.data() + (b * filters + f) * out_width;
      for (std::size_t o = 0; o < out_width; ++o) dst[o] = src[o] + bf;
    }
  }
  return y;
}

template <class T>
Conv1dGrads<T> conv1d_backward(const Tensor<T>& input, const Tensor<T>& weights, bool has_bias,
                               std::size_t stride, std::size_t padding, const Tensor<T>& grad_output) {
  require_rank3(input.shape(), "conv1d");
  const std::size_t batch = input.dim(0), channels = input.dim(1), width = input.dim(2);
  const std::size_t filters = weights.dim(0), kernel = weights.dim(2);
  const std::size_t out_width = conv_output_width(width, kernel, stride, padding);
  if (grad_output.shape() != Shape{batch, filters, out_width}) {
    throw ShapeError("conv1d upstream gradient has shape " + to_string(grad_output.shape()));
  }
  const std::size_t rows = channels * kernel;
  const std::size_t ncol = batch * out_width;

  std::vector<T> cols(rows * ncol);
  im2col(input.data(), batch, channels, width, kernel, stride, padding, out_width, cols.data());

  RowMajor<T> dmat(static_cast<Eigen::Index>(filters), static_cast<Eigen::Index>(ncol));
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t f = 0; f < filters; ++f) {
      const T* src = grad_output.data() + (b * filters + f) * out_width;
      T* dst = dmat.data() + f * ncol + b * out_width;
      std::copy(src, src + out_width, dst);
    }
  }

  Eigen::Map<const RowMajor<T>> wm(weights.data(), static_cast<Eigen::Index>(filters), static_cast<Eigen::Index>(rows));
  Eigen::Map<const RowMajor<T>> cm(cols.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(ncol));

  Conv1dGrads<T> g;
  g.weights = Tensor<T>(weights.shape());
  Eigen::Map<RowMajor<T>> dw(g.weights.data(), static_cast<Eigen::Index>(filters), static_cast<Eigen::Index>(rows));
  dw.noalias() = dmat * cm.transpose();

  if (has_bias) {
    g.bias = Tensor<T>({filters});
    for (std::size_t f = 0; f < filters; ++f) g.bias[f] = dmat.row(static_cast<Eigen::Index>(f)).sum();
  }

  RowMajor<T> dcols(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(ncol));
  dcols.noalias() = wm.transpose() * dmat;
  g.input = Tensor<T>(input.shape());
  col2im(dcols.data(), batch, channels, width, kernel, stride, padding, out_width, g.input.data());
  return g;
}

template <class T>
Tensor<T> batchnorm_forward(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta,
                            Tensor<T>& running_mean, Tensor<T>& running_var, Mode mode, double momentum,
                            double epsilon, BatchNormCache<T>* cache) {
  if (input.rank() != 3 && input.rank() != 2) throw ShapeError("batchnorm expects rank 2 or 3 input");
  const std::size_t batch = input.dim(0), channels = input.dim(1);
  const std::size_t width = input.rank() == 3 ? input.dim(2) : 1;
  if (gamma.size() != channels || beta.size() != channels || running_mean.size() != channels ||
      running_var.size() != channels) {
    throw ShapeError("batchnorm parameter length must equal channel count");
  }
  if (mode == Mode::train && batch < 2) throw DomainError("batchnorm needs a batch of at least 2 in train mode");
  Tensor<T> y(input.shape());
  if (cache) {
    cache->normalized = Tensor<T>(input.shape());
    cache->inv_std.assign(channels, T(0));
  }
  const std::size_t count = batch * width;

  for (std::size_t c = 0; c < channels; ++c) {
    double mean = 0.0;
    double inv_std = 0.0;
    if (mode == Mode::train) {
      double sum = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        const T* x = input.data() + (b * channels + c) * width;
        for (std::size_t w = 0; w < width; ++w) sum += x[w];
      }
      mean = sum / static_cast<double>(count);
      double sq = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        const T* x = input.data() + (b * channels + c) * width;
        for (std::size_t w = 0; w < width; ++w) {
          const double d = x[w] - mean;
          sq += d * d;
        }
      }
      const double var = sq / static_cast<double>(count);
      inv_std = 1.0 / std::sqrt(var + epsilon);
      const double unbiased = count > 1 ? var * static_cast<double>(count) / static_cast<double>(count - 1) : var;
      running_mean[c] = static_cast<T>((1.0 - momentum) * running_mean[c] + momentum * mean);
      running_var[c] = static_cast<T>((1.0 - momentum) * running_var[c] + momentum * unbiased);
    } else {
      mean = running_mean[c];
      inv_std = 1.0 / std::sqrt(static_cast<double>(running_var[c]) + epsilon);
    }
    const T m = static_cast<T>(mean);
    const T is = static_cast<T>(inv_std);
    const T gm = gamma[c];
    const T bt = beta[c];
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t base = (b * channels + c) * width;
      const T* x = input.data() + base;
      T* out = y.data() + base;
      if (cache) {
        T* xh = cache->normalized.data() + base;
        for (std::size_t w = 0; w < width; ++w) {
          xh[w] = (x[w] - m) * is;
          out[w] = gm * xh[w] + bt;
        }
      } else {
        for (std::size_t w = 0; w < width; ++w) out[w] = gm * ((x[w] - m) * is) + bt;
      }
    }
    if (cache) cache->inv_std[c] = is;
  }
  return y;
}

template <class T>
BatchNormGrads<T> batchnorm_backward(const BatchNormCache<T>& cache, const Tensor<T>& gamma,
                                     const Tensor<T>& grad_output) {
  const Tensor<T>& xh = cache.normalized;
  if (grad_output.shape() != xh.shape()) throw ShapeError("batchnorm upstream gradient shape mismatch");
  const std::size_t batch = xh.dim(0), channels = xh.dim(1);
  const std::size_t width = xh.rank() == 3 ? xh.dim(2) : 1;
  const double count = static_cast<double>(batch * width);

  BatchNormGrads<T> g;
  g.input = Tensor<T>(xh.shape());
  g.gamma = Tensor<T>({channels});
  g.beta = Tensor<T>({channels});
  for (std::size_t c = 0; c < channels; ++c) {
    double sum_dy = 0.0, sum_dy_xh = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t base = (b * channels + c) * width;
      const T* dy = grad_output.data() + base;
      const T* xn = xh.data() + base;
      for (std::size_t w = 0; w < width; ++w) {
        sum_dy += dy[w];
        sum_dy_xh += static_cast<double>(dy[w]) * xn[w];
      }
    }
    g.gamma[c] = static_cast<T>(sum_dy_xh);
    g.beta[c] = static_cast<T>(sum_dy);
    // dx = inv_std / n * (n * dxh - sum(dxh) - xh * sum(dxh * xh)), dxh = dy * gamma.
    const double k = static_cast<double>(gamma[c]) * cache.inv_std[c] / count;
    const T a = static_cast<T>(k * count);
    const T b0 = static_cast<T>(-k * sum_dy);
    const T b1 = static_cast<T>(-k * sum_dy_xh);
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t base = (b * channels + c) * width;
      const T* dy = grad_output.data() + base;
      const T* xn = xh.data() + base;
      T* dx = g.input.data() + base;
      for (std::size_t w = 0; w < width; ++w) dx[w] = a * dy[w] + b0 + b1 * xn[w];
    }
  }
  return g;
}

template <class T>
Tensor<T> relu_forward(const Tensor<T>& input) {
  Tensor<T> y(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) y[i] = input[i] > T(0) ? input[i] : T(0);
  return y;
}

template <class T>
Tensor<T> relu_backward(const Tensor<T>& input, const Tensor<T>& grad_output) {
  if (input.shape() != grad_output.shape()) throw ShapeError("relu upstream gradient shape mismatch");
  Tensor<T> g(input.shape());
  const T* __restrict x = input.data();
  const T* __restrict dy = grad_output.data();
  T* __restrict dx = g.data();
  const std::size_t n = input.size();
  for (std::size_t i = 0; i < n; ++i) {
    const T d = dy[i];
    dx[i] = x[i] > T(0) ? d : T(0);
  }
  return g;
}

namespace {

std::size_t pool_output_width(std::size_t width, std::size_t pool, std::size_t stride) {
  if (pool == 0 || stride == 0) throw ShapeError("pool width and stride must be positive");
  if (width < pool) throw ShapeError("pool width " + std::to_string(pool) + " exceeds input width " + std::to_string(width));
  return (width - pool) / stride + 1;
}

}  // namespace

template <class T>
Tensor<T> maxpool_forward(const Tensor<T>& input, std::size_t width, std::size_t stride,
                          std::vector<std::size_t>* argmax) {
  require_rank3(input.shape(), "maxpool");
  const std::size_t batch = input.dim(0), channels = input.dim(1), in_w = input.dim(2);
  const std::size_t out_w = pool_output_width(in_w, width, stride);
  Tensor<T> y({batch, channels, out_w});
  if (argmax) argmax->assign(y.size(), 0);
  for (std::size_t bc = 0; bc < batch * channels; ++bc) {
    const std::size_t in_base = bc * in_w;
    for (std::size_t o = 0; o < out_w; ++o) {
      std::size_t best = in_base + o * stride;
      for (std::size_t k = 1; k < width; ++k) {
        const std::size_t idx = in_base + o * stride + k;
        if (input[idx] > input[best]) best = idx;
      }
      y[bc * out_w + o] = input[best];
      if (argmax) (*argmax)[bc * out_w + o] = best;
    }
  }
  return y;
}

template <class T>
Tensor<T> maxpool_backward(const Shape& input_shape, const std::vector<std::size_t>& argmax,
                           const Tensor<T>& grad_output) {
  if (argmax.size() != grad_output.size()) throw ShapeError("maxpool upstream gradient shape mismatch");
  Tensor<T> g(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) g[argmax[i]] += grad_output[i];
  return g;
}

template <class T>
Tensor<T> avgpool_forward(const Tensor<T>& input, std::size_t width, std::size_t stride) {
  require_rank3(input.shape(), "avgpool");
  const std::size_t batch = input.dim(0), channels = input.dim(1), in_w = input.dim(2);
  const std::size_t out_w = pool_output_width(in_w, width, stride);
  Tensor<T> y({batch, channels, out_w});
  const double scale = 1.0 / static_cast<double>(width);
  for (std::size_t bc = 0; bc < batch * channels; ++bc) {
    for (std::size_t o = 0; o < out_w; ++o) {
      double s = 0.0;
      for (std::size_t k = 0; k < width; ++k) s += input[bc * in_w + o * stride + k];
      y[bc * out_w + o] = static_cast<T>(s * scale);
    }
  }
  return y;
}

template <class T>
Tensor<T> avgpool_backward(const Shape& input_shape, std::size_t width, std::size_t stride,
                           const Tensor<T>& grad_output) {
  require_rank3(input_shape, "avgpool");
  const std::size_t batch = input_shape[0], channels = input_shape[1], in_w = input_shape[2];
  const std::size_t out_w = pool_output_width(in_w, width, stride);
  if (grad_output.shape() != Shape{batch, channels, out_w}) throw ShapeError("avgpool upstream gradient shape mismatch");
  Tensor<T> g(input_shape);
  const T scale = static_cast<T>(1.0 / static_cast<double>(width));
  for (std::size_t bc = 0; bc < batch * channels; ++bc) {
    for (std::size_t o = 0; o < out_w; ++o) {
      const T d = grad_output[bc * out_w + o] * scale;
      for (std::size_t k = 0; k < width; ++k) g[bc * in_w + o * stride + k] += d;
    }
  }
  return g;
}

template <class T>
Tensor<T> dropout_forward(const Tensor<T>& input, double p, Mode mode, Rng& rng, std::vector<T>* mask) {
  if (!(p >= 0.0 && p < 1.0)) throw DomainError("dropout rate must lie in [0, 1)");
  if (mode == Mode::infer || p == 0.0) {
    if (mask) mask->assign(input.size(), T(1));
    return input;
  }
  std::bernoulli_distribution keep(1.0 - p);
  const T scale = static_cast<T>(1.0 / (1.0 - p));
  std::vector<T> m(input.size());
  Tensor<T> y(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) {
    m[i] = keep(rng) ? scale : T(0);
    y[i] = input[i] * m[i];
  }
  if (mask) *mask = std::move(m);
  return y;
}

template <class T>
Tensor<T> dropout_backward(const std::vector<T>& mask, const Tensor<T>& grad_output) {
  if (mask.size() != grad_output.size()) throw ShapeError("dropout upstream gradient shape mismatch");
  Tensor<T> g(grad_output.shape());
  for (std::size_t i = 0; i < mask.size(); ++i) g[i] = grad_output[i] * mask[i];
  return g;
}

template <class T>
Tensor<T> dense_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias) {
  if (input.rank() != 2 || weights.rank() != 2) throw ShapeError("dense expects [batch, in] input and [out, in] weights");
  const std::size_t batch = input.dim(0), in = input.dim(1), out = weights.dim(0);
  if (weights.dim(1) != in) {
    throw ShapeError("dense weights expect " + std::to_string(weights.dim(1)) + " inputs, got " + std::to_string(in));
  }
  if (bias.size() != out) throw ShapeError("dense bias length must equal output units");
  Tensor<T> y({batch, out});
  Eigen::Map<const RowMajor<T>> x(input.data(), static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(in));
  Eigen::Map<const RowMajor<T>> w(weights.data(), static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
  Eigen::Map<RowMajor<T>> ym(y.data(), static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(out));
  ym.noalias() = x * w.transpose();
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t u = 0; u < out; ++u) y[b * out + u] += bias[u];
  return y;
}

template <class T>
DenseGrads<T> dense_backward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& grad_output) {
  const std::size_t batch = input.dim(0), in = input.dim(1), out = weights.dim(0);
  if (grad_output.shape() != Shape{batch, out}) throw ShapeError("dense upstream gradient shape mismatch");
  Eigen::Map<const RowMajor<T>> x(input.data(), static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(in));
  Eigen::Map<const RowMajor<T>> w(weights.data(), static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
  Eigen::Map<const RowMajor<T>> dy(grad_output.data(), static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(out));
  DenseGrads<T> g;
  g.input = Tensor<T>(input.shape());
  g.weights = Tensor<T>(weights.shape());
  g.bias = Tensor<T>({out});
  Eigen::Map<RowMajor<T>> dx(g.input.data(), static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(in));
  Eigen::Map<RowMajor<T>> dw(g.weights.data(), static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
  dx.noalias() = dy * w;
  dw.noalias() = dy.transpose() * x;
  for (std::size_t u = 0; u < out; ++u) g.bias[u] = dy.col(static_cast<Eigen::Index>(u)).sum();
  return g;
}

template <class T>
Tensor<T> softmax(const Tensor<T>& logits) {
  if (logits.rank() != 2) throw ShapeError("softmax expects [batch, classes]");
  const std::size_t batch = logits.dim(0), classes = logits.dim(1);
  Tensor<T> p(logits.shape());
  for (std::size_t b = 0; b < batch; ++b) {
    const T* z = logits.data() + b * classes;
    const double m = *std::max_element(z, z + classes);
    double s = 0.0;
    for (std::size_t c = 0; c < classes; ++c) s += std::exp(z[c] - m);
    for (std::size_t c = 0; c < classes; ++c) p[b * classes + c] = static_cast<T>(std::exp(z[c] - m) / s);
  }
  return p;
}

template <class T>
LossResult<T> softmax_cross_entropy(const Tensor<T>& logits, const Tensor<T>& targets) {
  if (logits.rank() != 2 || logits.shape() != targets.shape()) {
    throw ShapeError("cross-entropy needs matching [batch, classes] logits and targets");
  }
  const std::size_t batch = logits.dim(0), classes = logits.dim(1);
  if (batch == 0) throw ShapeError("cross-entropy of an empty batch");
  LossResult<T> r;
  r.gradient = Tensor<T>(logits.shape());
  double total = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const T* z = logits.data() + b * classes;
    const T* y = targets.data() + b * classes;
    std::size_t hot = classes;
    for (std::size_t c = 0; c < classes; ++c) {
      if (y[c] == T(1) && hot == classes) {
        hot = c;
      } else if (y[c] != T(0)) {
        throw DomainError("cross-entropy targets must be one-hot rows");
      }
    }
    if (hot == classes) throw DomainError("cross-entropy targets must be one-hot rows");

    const std::size_t top = static_cast<std::size_t>(std::max_element(z, z + classes) - z);
    const double m = z[top];
    // Sum of exp(z_c - m) excluding the max term keeps log1p accurate for
    // confident predictions.
    double rest = 0.0;
    for (std::size_t c = 0; c < classes; ++c)
      if (c != top) rest += std::exp(static_cast<double>(z[c]) - m);
    total += (m - z[hot]) + std::log1p(rest);
    const double denom = 1.0 + rest;
    for (std::size_t c = 0; c < classes; ++c) {
      const double p = std::exp(static_cast<double>(z[c]) - m) / denom;
      r.gradient[b * classes + c] = static_cast<T>((p - static_cast<double>(y[c])) / static_cast<double>(batch));
    }
  }
  r.loss = total / static_cast<double>(batch);
  return r;
}

template <class T>
Tensor<T> one_hot(const std::vector<std::size_t>& labels, std::size_t num_classes) {
  Tensor<T> t({labels.size(), num_classes});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= num_classes) throw DataError("label " + std::to_string(labels[i]) + " out of range");
    t[i * num_classes + labels[i]] = T(1);
  }
  return t;
}

#define SRCOUNT_INSTANTIATE_OPS(T)                                                                              \
  template Tensor<T> conv1d_forward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, std::size_t,       \
                                       std::size_t);                                                            \
  template Conv1dGrads<T> conv1d_backward<T>(const Tensor<T>&, const Tensor<T>&, bool, std::size_t, std::size_t, \
                                             const Tensor<T>&);                                                 \
  template Tensor<T> batchnorm_forward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Tensor<T>&,     \
                                          Tensor<T>&, Mode, double, double, BatchNormCache<T>*);                \
  template BatchNormGrads<T> batchnorm_backward<T>(const BatchNormCache<T>&, const Tensor<T>&, const Tensor<T>&); \
  template Tensor<T> relu_forward<T>(const Tensor<T>&);                                                         \
  template Tensor<T> relu_backward<T>(const Tensor<T>&, const Tensor<T>&);                                      \
  template Tensor<T> maxpool_forward<T>(const Tensor<T>&, std::size_t, std::size_t, std::vector<std::size_t>*); \
  template Tensor<T> maxpool_backward<T>(const Shape&, const std::vector<std::size_t>&, const Tensor<T>&);      \
  template Tensor<T> avgpool_forward<T>(const Tensor<T>&, std::size_t, std::size_t);                            \
  template Tensor<T> avgpool_backward<T>(const Shape&, std::size_t, std::size_t, const Tensor<T>&);             \
  template Tensor<T> dropout_forward<T>(const Tensor<T>&, double, Mode, Rng&, std::vector<T>*);                 \
  template Tensor<T> dropout_backward<T>(const std::vector<T>&, const Tensor<T>&);                              \
  template Tensor<T> dense_forward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                    \
  template DenseGrads<T> dense_backward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);               \
  template Tensor<T> softmax<T>(const Tensor<T>&);                                                              \
  template LossResult<T> softmax_cross_entropy<T>(const Tensor<T>&, const Tensor<T>&);                          \
  template Tensor<T> one_hot<T>(const std::vector<std::size_t>&, std::size_t);

SRCOUNT_INSTANTIATE_OPS(float)
SRCOUNT_INSTANTIATE_OPS(double)

}  // namespace srcount::nn::ops
