#include <doctest.h>

#include <cmath>
#include <map>

#include "srcount/errors.hpp"
#include "srcount/nn/layers.hpp"
#include "srcount/nn/ops.hpp"
#include "srcount/nn/optim.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"

using namespace srcount;
using namespace srcount::nn;
using gradcheck::random_tensor;

namespace {

double max_abs_diff(const Tensor<double>& a, const Tensor<double>& b) {
  REQUIRE(a.shape() == b.shape());
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

NamedTensor<double> find(std::vector<NamedTensor<double>> v, const std::string& name) {
  for (auto& t : v)
    if (t.name == name) return t;
  FAIL("missing tensor " << name);
  return {};
}

}  // namespace

TEST_CASE("conv1d forward") {
  Tensor<double> x({1, 1, 5}, {1, -2, 3, 4, 5});
  Tensor<double> id({1, 1, 3}, {0, 1, 0});
  CHECK(ops::conv1d_forward(x, id, Tensor<double>(), 1, 1).storage() == x.storage());
  Tensor<double> zero({2, 1, 3});
  Tensor<double> b({2}, {0.5, -1.5});
  const auto y = ops::conv1d_forward(x, zero, b, 1, 1);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(y(0, 0, i) == 0.5);
    CHECK(y(0, 1, i) == -1.5);
  }
  CHECK(ops::conv_output_width(110, 3, 1, 1) == 110);
  CHECK(ops::conv_output_width(30, 7, 2, 3) == 15);
  CHECK_THROWS_AS(ops::conv1d_forward(x, Tensor<double>({1, 1, 8}), Tensor<double>(), 1, 1), ShapeError);
  CHECK_THROWS_AS(ops::conv1d_forward(x, Tensor<double>({1, 2, 3}), Tensor<double>(), 1, 1), ShapeError);
}

TEST_CASE("forward kernels agree with nested-loop oracles") {
  Rng rng(404);
  for (int t = 0; t < 200; ++t) {
    const std::size_t B = gradcheck::pick(rng, 1, 3), C = gradcheck::pick(rng, 1, 4);
    const std::size_t W = gradcheck::pick(rng, 3, 20), F = gradcheck::pick(rng, 1, 5);
    const std::size_t K = gradcheck::pick(rng, 1, 3), S = gradcheck::pick(rng, 1, 3), P = gradcheck::pick(rng, 0, 2);
    const auto x = random_tensor({B, C, W}, rng);
    const auto w = random_tensor({F, C, K}, rng);
    const auto bias = t % 2 ? random_tensor({F}, rng) : Tensor<double>();
    CHECK(max_abs_diff(ops::conv1d_forward(x, w, bias, S, P), oracle::conv1d(x, w, bias, S, P)) <= 1e-12);

    const auto dw = random_tensor({F, C * W}, rng);
    const auto db = random_tensor({F}, rng);
    CHECK(max_abs_diff(ops::dense_forward(x.reshaped({B, C * W}), dw, db), oracle::dense(x, dw, db)) <= 1e-12);

    const std::size_t pw = gradcheck::pick(rng, 1, 3), ps = gradcheck::pick(rng, 1, 2);
    CHECK(max_abs_diff(ops::maxpool_forward(x, pw, ps, nullptr), oracle::pool(x, pw, ps, true)) <= 1e-12);
    CHECK(max_abs_diff(ops::avgpool_forward(x, pw, ps), oracle::pool(x, pw, ps, false)) <= 1e-12);
  }
}

TEST_CASE("conv1d backward properties") {
  Rng rng(5);
  const auto x = random_tensor({2, 3, 9}, rng);
  const auto w = random_tensor({4, 3, 3}, rng);
  const Tensor<double> g0({2, 4, 9});
  const auto z = ops::conv1d_backward(x, w, true, 1, 1, g0);
  for (double v : z.weights.values()) CHECK(v == 0.0);
  for (double v : z.bias.values()) CHECK(v == 0.0);
  const auto g = random_tensor({2, 4, 9}, rng);
  auto g2 = g;
  for (auto& v : g2.values()) v *= 2;
  const auto a = ops::conv1d_backward(x, w, true, 1, 1, g);
  const auto b = ops::conv1d_backward(x, w, true, 1, 1, g2);
  for (std::size_t i = 0; i < a.input.size(); ++i) CHECK(b.input[i] == doctest::Approx(2 * a.input[i]).epsilon(1e-14));
  for (std::size_t i = 0; i < a.weights.size(); ++i) CHECK(b.weights[i] == doctest::Approx(2 * a.weights[i]).epsilon(1e-14));
  for (std::size_t i = 0; i < a.bias.size(); ++i) CHECK(b.bias[i] == doctest::Approx(2 * a.bias[i]).epsilon(1e-14));
}

TEST_CASE("every layer passes finite-difference checks on random shapes") {
  Rng rng(2024);
  std::map<std::string, double> worst;
  for (int round = 0; round < 50; ++round)
    for (const auto& c : gradcheck::random_cases(rng)) worst[c.kind] = std::max(worst[c.kind], c.result.worst());
  CHECK(worst.size() == 9);
  for (const auto& [kind, err] : worst) {
    INFO(kind);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("batch norm") {
  Tensor<double> gamma({2}, 1.0), beta({2}, 0.0), rm({2}, 0.0), rv({2}, 1.0);
  Tensor<double> constant({4, 2, 3}, 7.0);
  const auto yc = ops::batchnorm_forward(constant, gamma, beta, rm, rv, Mode::train, 0.1, 1e-5,
                                         static_cast<ops::BatchNormCache<double>*>(nullptr));
  for (double v : yc.values()) CHECK(v == 0.0);
  CHECK(rm[0] == doctest::Approx(0.7));
  CHECK(rv[0] == doctest::Approx(0.9));

  Rng rng(3);
  const auto x = random_tensor({8, 2, 5}, rng, -3.0, 5.0);
  const auto y = ops::batchnorm_forward(x, gamma, beta, rm, rv, Mode::train, 0.1, 1e-5,
                                        static_cast<ops::BatchNormCache<double>*>(nullptr));
  for (std::size_t c = 0; c < 2; ++c) {
    double s = 0, s2 = 0;
    for (std::size_t b = 0; b < 8; ++b)
      for (std::size_t w = 0; w < 5; ++w) {
        s += y(b, c, w);
        s2 += y(b, c, w) * y(b, c, w);
      }
    const double mean = s / 40, var = s2 / 40 - mean * mean;
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(var - 1.0) < 1e-4);
  }
  CHECK_THROWS_AS(ops::batchnorm_forward(random_tensor({1, 2, 5}, rng), gamma, beta, rm, rv, Mode::train, 0.1,
                                         1e-5, static_cast<ops::BatchNormCache<double>*>(nullptr)),
                  DomainError);
  CHECK_NOTHROW(ops::batchnorm_forward(random_tensor({1, 2, 5}, rng), gamma, beta, rm, rv, Mode::infer, 0.1, 1e-5,
                                       static_cast<ops::BatchNormCache<double>*>(nullptr)));
}

TEST_CASE("elementwise and pooling examples") {
  Tensor<double> r({1, 1, 3}, {-1, 0, 2});
  CHECK(ops::relu_forward(r).storage() == std::vector<double>{0, 0, 2});
  Tensor<double> m({1, 1, 4}, {1, 3, 2, 0});
  CHECK(ops::maxpool_forward(m, 2, 2, nullptr).storage() == std::vector<double>{3, 2});
  CHECK(ops::avgpool_forward(m, 2, 2).storage() == std::vector<double>{2, 1});
  Rng rng(1);
  const auto x = random_tensor({3, 2, 4}, rng);
  for (Mode mode : {Mode::train, Mode::infer})
    CHECK(ops::dropout_forward(x, 0.0, mode, rng, static_cast<std::vector<double>*>(nullptr)).storage() == x.storage());
  CHECK(ops::dropout_forward(x, 0.5, Mode::infer, rng, static_cast<std::vector<double>*>(nullptr)).storage() ==
        x.storage());
  std::vector<double> mask;
  const auto y = ops::dropout_forward(x, 0.4, Mode::train, rng, &mask);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK((mask[i] == 0.0 || std::abs(mask[i] - 1.0 / 0.6) < 1e-15));
    CHECK(y[i] == x[i] * mask[i]);
  }
  CHECK_THROWS_AS(ops::dropout_forward(x, 1.0, Mode::train, rng, &mask), DomainError);
}

TEST_CASE("softmax cross-entropy") {
  for (std::size_t C : {2, 6, 10}) {
    const auto r = ops::softmax_cross_entropy(Tensor<double>({3, C}), ops::one_hot<double>({0, 1, C - 1}, C));
    CHECK(r.loss == doctest::Approx(std::log(double(C))).epsilon(1e-14));
  }
  Tensor<double> logits({1, 3}, {50, 0, 0});
  CHECK(ops::softmax_cross_entropy(logits, ops::one_hot<double>({0}, 3)).loss < 1e-20);

  Rng rng(9);
  const auto z = random_tensor({4, 5}, rng, -3, 3);
  const auto t = ops::one_hot<double>({0, 4, 2, 2}, 5);
  const auto res = ops::softmax_cross_entropy(z, t);
  for (std::size_t i = 0; i < z.size(); ++i) {
    auto zp = z, zm = z;
    zp[i] += 1e-6;
    zm[i] -= 1e-6;
    const double num = (ops::softmax_cross_entropy(zp, t).loss - ops::softmax_cross_entropy(zm, t).loss) / 2e-6;
    CHECK(std::abs(num - res.gradient[i]) < 1e-6);
  }
  Tensor<double> bad({1, 3}, {0, 1, 1});
  CHECK_THROWS_AS(ops::softmax_cross_entropy(z.reshaped({4, 5}), Tensor<double>({4, 5})), DomainError);
  CHECK_THROWS_AS(ops::softmax_cross_entropy(Tensor<double>({1, 3}), bad), DomainError);
}

TEST_CASE("xavier initialisation") {
  Rng a(17), b(17);
  const Shape shape{100, 100, 100};
  const auto w = xavier_init<double>(shape, a);
  const auto [fi, fo] = fan_in_out(shape);
  CHECK(fi == 10000);
  CHECK(fo == 10000);
  const double bound = std::sqrt(6.0 / (fi + fo));
  double s = 0, s2 = 0;
  for (double v : w.values()) {
    CHECK_FALSE(std::abs(v) > bound);
    s += v;
    s2 += v * v;
  }
  const double n = double(w.size());
  const double var = s2 / n - (s / n) * (s / n);
  CHECK(std::abs(var / (2.0 / (fi + fo)) - 1.0) < 0.05);
  CHECK(xavier_init<double>(shape, b).storage() == w.storage());
  CHECK(fan_in_out({7, 3}) == std::pair<std::size_t, std::size_t>{3, 7});
}

TEST_CASE("sgd with nesterov momentum") {
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.momentum = 0.9;
  std::vector<double> p{0.0}, v{0.0};
  const std::vector<double> g{1.0};
  // Hand recurrence: v1 = -0.1, p1 = -0.19; v2 = -0.19, p2 = -0.19 - 0.171 - 0.1.
  sgd_nesterov_step<double>(p, g, v, cfg);
  CHECK(p[0] == doctest::Approx(-0.19).epsilon(1e-15));
  sgd_nesterov_step<double>(p, g, v, cfg);
  CHECK(v[0] == doctest::Approx(-0.19).epsilon(1e-15));
  CHECK(p[0] == doctest::Approx(-0.461).epsilon(1e-15));

  cfg.momentum = 0.0;
  std::vector<double> q{2.0}, u{0.0};
  sgd_nesterov_step<double>(q, std::vector<double>{3.0}, u, cfg);
  CHECK(q[0] == doctest::Approx(1.7));

  cfg.momentum = 0.9;
  std::vector<double> r{1.25}, rv{0.0};
  sgd_nesterov_step<double>(r, std::vector<double>{0.0}, rv, cfg);
  CHECK(r[0] == 1.25);

  cfg.nesterov = false;
  std::vector<double> c{0.0}, cv{0.0};
  sgd_nesterov_step<double>(c, g, cv, cfg);
  sgd_nesterov_step<double>(c, g, cv, cfg);
  CHECK(c[0] == doctest::Approx(-0.29));

  TrainConfig bad;
  bad.learning_rate = 0;
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad = TrainConfig{};
  bad.momentum = 1.0;
  CHECK_THROWS_AS(validate(bad), ConfigError);
}

TEST_CASE("residual block") {
  SUBCASE("zero branch with identity shortcut passes non-negative input") {
    ResidualBlock<double> block(LayerSpec::residual_block(3, 1, false), 3);
    Rng rng(2);
    const auto x = random_tensor({2, 3, 6}, rng, 0.0, 2.0);
    CHECK(max_abs_diff(block.forward(x), x) == 0.0);
    CHECK(max_abs_diff(block.infer(x), x) == 0.0);
  }
  SUBCASE("identity projection reproduces the identity shortcut") {
    Rng rng(6);
    ResidualBlock<double> plain(LayerSpec::residual_block(3, 1, false), 3);
    ResidualBlock<double> proj(LayerSpec::residual_block(3, 1, true), 3);
    plain.initialize(rng);
    std::vector<NamedTensor<double>> a, b, ab, bb;
    plain.parameters("", a);
    proj.parameters("", b);
    plain.buffers("", ab);
    proj.buffers("", bb);
    for (auto& t : a) *find(b, t.name).value = *t.value = random_tensor(t.value->shape(), rng, 0.5, 1.0);
    for (auto& t : ab) *find(bb, t.name).value = *t.value;
    auto& w = proj.projection()->weight().value;
    w.fill(0.0);
    for (std::size_t c = 0; c < 3; ++c) w[c * 3 + c] = 1.0;
    find(b, "proj_bn.gamma").value->fill(1.0);
    find(b, "proj_bn.beta").value->fill(0.0);
    find(bb, "proj_bn.running_mean").value->fill(0.0);
    find(bb, "proj_bn.running_var").value->fill(1.0 - 1e-5);
    const auto x = random_tensor({2, 3, 7}, rng);
    CHECK(max_abs_diff(plain.infer(x), proj.infer(x)) < 1e-14);
  }
  CHECK_THROWS_AS(ResidualBlock<double>(LayerSpec::residual_block(4, 1, false), 3), ShapeError);
  CHECK_THROWS_AS(ResidualBlock<double>(LayerSpec::residual_block(3, 2, false), 3), ShapeError);
}

TEST_CASE("training loop sanity") {
  Rng rng(12);
  Sequential<double> net({4}, {LayerSpec::dense(8), LayerSpec::relu(), LayerSpec::dense(2)}, 1);
  net.initialize(rng);
  Tensor<double> x({32, 4});
  std::vector<std::size_t> y(32);
  for (std::size_t i = 0; i < 32; ++i) {
    y[i] = i % 2;
    for (std::size_t j = 0; j < 4; ++j) x[i * 4 + j] = (y[i] ? 1.0 : -1.0) + 0.3 * std::sin(double(i * 7 + j));
  }
  const auto t = ops::one_hot<double>(y, 2);
  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  SgdOptimizer<double> opt(cfg);
  double prev = 1e300;
  for (int step = 0; step < 10; ++step) {
    net.zero_grad();
    const auto r = ops::softmax_cross_entropy(net.forward(x), t);
    CHECK(r.loss < prev);
    prev = r.loss;
    net.backward(r.gradient);
    auto params = net.parameters();
    opt.step(params);
  }
}

TEST_CASE("inference ignores batch composition") {
  Rng rng(8);
  Sequential<double> net({2, 12},
                         {LayerSpec::conv1d(4, 3, 1, 1, false), LayerSpec::batchnorm(), LayerSpec::relu(),
                          LayerSpec::maxpool(), LayerSpec::dropout(0.4), LayerSpec::dense(3)},
                         3);
  net.initialize(rng);
  net.forward(random_tensor({8, 2, 12}, rng));  // moves running stats
  const auto batch = random_tensor({5, 2, 12}, rng);
  const auto full = net.infer(batch);
  for (std::size_t i = 0; i < 5; ++i) {
    Tensor<double> one({1, 2, 12}, std::vector<double>(batch.data() + i * 24, batch.data() + (i + 1) * 24));
    const auto y = net.infer(one);
    for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(y[k] - full[i * 3 + k]) < 1e-12);
  }
  CHECK(net.infer(batch).storage() == full.storage());
}
