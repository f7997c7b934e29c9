#include "emgkey/nn/gradcheck.hpp"
#include "emgkey/nn/network.hpp"
#include "emgkey/nn/ops.hpp"
#include "emgkey/nn/optim.hpp"
#include "emgkey/nn/search.hpp"
#include "emgkey/nn/serialize.hpp"
#include "emgkey/nn/train.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

using namespace emgkey;
using namespace emgkey::nn;

namespace {

Tensor<double> random_tensor(const Shape& shape, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  Tensor<double> t(shape);
  for (auto& v : t.vec()) v = scale * rng.normal();
  return t;
}

Var<double> leaf(const Shape& shape, std::uint64_t seed, double scale = 1.0) {
  return parameter(random_tensor(shape, seed, scale));
}

/// Largest relative gradient error of sum(r * build()) with a fixed random r.
template <class F>
double grad_error(F build, const std::vector<std::pair<std::string, Var<double>>>& wrt) {
  Tensor<double> r;
  auto loss = [&]() {
    auto y = build();
    if (r.size() != y->value.size()) r = random_tensor(y->value.shape(), 99);
    return project(y, r);
  };
  const auto report = check_gradients(loss, wrt);
  INFO("worst coordinate " << report.worst);
  return report.max_rel_error;
}

constexpr double kGradTol = 1e-4;

/// Naive grouped, dilated, padded 1-D convolution.
Tensor<double> conv1d_direct(const Tensor<double>& x, const Tensor<double>& w, const Tensor<double>& b,
                             const Conv1dParams& p) {
  const auto B = x.dim(0), C = x.dim(1), L = x.dim(2), O = w.dim(0), Cg = w.dim(1), K = w.dim(2);
  const auto Og = O / p.groups;
  const auto Lo = L + p.pad_left + p.pad_right - p.dilation * (K - 1);
  Tensor<double> y({B, O, Lo});
  for (std::size_t n = 0; n < B; ++n)
    for (std::size_t o = 0; o < O; ++o)
      for (std::size_t t = 0; t < Lo; ++t) {
        double s = b.empty() ? 0.0 : b[o];
        const auto g = o / Og;
        for (std::size_t ci = 0; ci < Cg; ++ci)
          for (std::size_t k = 0; k < K; ++k) {
            const long idx = static_cast<long>(t + k * p.dilation) - static_cast<long>(p.pad_left);
            if (idx < 0 || idx >= static_cast<long>(L)) continue;
            s += w[(o * Cg + ci) * K + k] * x[(n * C + g * Cg + ci) * L + static_cast<std::size_t>(idx)];
          }
        y[(n * O + o) * Lo + t] = s;
      }
  return y;
}

double sigmoid_ref(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

TEST_CASE("grouped 1x1 convolution with identity weights reproduces its input") {
  auto x = constant(random_tensor({3, 28, 50}, 1));
  auto w = constant(Tensor<double>({28, 1, 1}, 1.0));
  auto y = conv1d<double>(x, w, nullptr, {28, 1, 0, 0});
  REQUIRE(y->value.shape() == x->value.shape());
  CHECK(y->value.vec() == x->value.vec());
}

TEST_CASE("relu zeroes negatives and passes non-negatives") {
  auto x = constant(Tensor<double>({5}, std::vector<double>{-2.0, -0.0, 0.0, 0.5, 3.0}));
  const auto y = relu<double>(x)->value.vec();
  CHECK(y == Buffer<double>{0.0, 0.0, 0.0, 0.5, 3.0});
}

TEST_CASE("conv1d matches a direct convolution") {
  const Conv1dParams p{2, 2, 3, 1};
  const auto x = random_tensor({2, 4, 11}, 2);
  const auto w = random_tensor({6, 2, 3}, 3);
  const auto b = random_tensor({6}, 4);
  const auto y = conv1d<double>(constant(x), constant(w), constant(b), p)->value;
  const auto ref = conv1d_direct(x, w, b, p);
  REQUIRE(y.shape() == ref.shape());
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(y[i] == doctest::Approx(ref[i]).epsilon(1e-12));
}

TEST_CASE("conv2d matches a direct strided, padded convolution") {
  const auto x = random_tensor({2, 3, 7, 6}, 5);
  const auto w = random_tensor({4, 3, 3, 3}, 6);
  const auto y = conv2d<double>(constant(x), constant(w), nullptr, {2, 1})->value;
  REQUIRE(y.shape() == Shape{2, 4, 4, 3});
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t o = 0; o < 4; ++o)
      for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
          double s = 0.0;
          for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t a = 0; a < 3; ++a)
              for (std::size_t bb = 0; bb < 3; ++bb) {
                const long r = static_cast<long>(2 * i + a) - 1;
                const long q = static_cast<long>(2 * j + bb) - 1;
                if (r < 0 || r >= 7 || q < 0 || q >= 6) continue;
                s += w[((o * 3 + c) * 3 + a) * 3 + bb] *
                     x[((n * 3 + c) * 7 + static_cast<std::size_t>(r)) * 6 + static_cast<std::size_t>(q)];
              }
          CHECK(y[((n * 4 + o) * 4 + i) * 3 + j] == doctest::Approx(s).epsilon(1e-12));
        }
}

TEST_CASE("lstm matches a scalar reference recurrence") {
  const std::size_t B = 2, C = 3, L = 4, H = 2;
  const auto x = random_tensor({B, C, L}, 7);
  const auto wih = random_tensor({4 * H, C}, 8, 0.5);
  const auto whh = random_tensor({4 * H, H}, 9, 0.5);
  const auto bias = random_tensor({4 * H}, 10, 0.5);
  const auto seq = lstm<double>(constant(x), constant(wih), constant(whh), constant(bias), true)->value;
  const auto last = lstm<double>(constant(x), constant(wih), constant(whh), constant(bias), false)->value;
  for (std::size_t n = 0; n < B; ++n) {
    std::vector<double> h(H, 0.0), c(H, 0.0);
    for (std::size_t t = 0; t < L; ++t) {
      std::vector<double> z(4 * H);
      for (std::size_t r = 0; r < 4 * H; ++r) {
        z[r] = bias[r];
        for (std::size_t k = 0; k < C; ++k) z[r] += wih[r * C + k] * x[(n * C + k) * L + t];
        for (std::size_t k = 0; k < H; ++k) z[r] += whh[r * H + k] * h[k];
      }
      for (std::size_t u = 0; u < H; ++u) {
        const double i = sigmoid_ref(z[u]), f = sigmoid_ref(z[H + u]);
        const double g = std::tanh(z[2 * H + u]), o = sigmoid_ref(z[3 * H + u]);
        c[u] = f * c[u] + i * g;
        h[u] = o * std::tanh(c[u]);
        CHECK(seq[(n * H + u) * L + t] == doctest::Approx(h[u]).epsilon(1e-12));
      }
    }
    for (std::size_t u = 0; u < H; ++u) CHECK(last[n * H + u] == doctest::Approx(h[u]).epsilon(1e-12));
  }
}

TEST_CASE("batch norm normalises per channel and tracks running statistics") {
  const auto x = random_tensor({4, 3, 5}, 11, 3.0);
  Tensor<double> rm({3}, 0.0), rv({3}, 1.0);
  auto g = constant(Tensor<double>({3}, 1.0));
  auto b = constant(Tensor<double>({3}, 0.0));
  const auto y = batch_norm<double>(constant(x), g, b, rm, rv, true, {0.1, 1e-5})->value;
  for (std::size_t c = 0; c < 3; ++c) {
    double m = 0.0, m2 = 0.0, xm = 0.0, xs = 0.0;
    for (std::size_t n = 0; n < 4; ++n)
      for (std::size_t t = 0; t < 5; ++t) {
        m += y[(n * 3 + c) * 5 + t];
        m2 += y[(n * 3 + c) * 5 + t] * y[(n * 3 + c) * 5 + t];
        xm += x[(n * 3 + c) * 5 + t];
      }
    xm /= 20.0;
    for (std::size_t n = 0; n < 4; ++n)
      for (std::size_t t = 0; t < 5; ++t) xs += std::pow(x[(n * 3 + c) * 5 + t] - xm, 2);
    CHECK(m / 20.0 == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(m2 / 20.0 == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(rm[c] == doctest::Approx(0.1 * xm));
    CHECK(rv[c] == doctest::Approx(0.9 + 0.1 * xs / 19.0));
  }
}

TEST_CASE("analytic gradients agree with central differences for every layer") {
  SUBCASE("pointwise activations") {
    auto x = leaf({3, 7}, 20);
    CHECK(grad_error([&] { return relu<double>(x); }, {{"x", x}}) < kGradTol);
    CHECK(grad_error([&] { return sigmoid<double>(x); }, {{"x", x}}) < kGradTol);
    CHECK(grad_error([&] { return nn::tanh<double>(x); }, {{"x", x}}) < kGradTol);
    CHECK(grad_error([&] { return softmax<double>(x); }, {{"x", x}}) < kGradTol);
  }
  SUBCASE("residual add and gated activation") {
    auto a = leaf({2, 3, 4}, 21);
    auto b = leaf({2, 3, 4}, 22);
    auto c = leaf({2, 3, 4}, 23);
    CHECK(grad_error([&] {
      const Var<double> xs[] = {a, b, c};
      return add<double>(std::span<const Var<double>>(xs));
    }, {{"a", a}, {"b", b}, {"c", c}}) < kGradTol);
    CHECK(grad_error([&] { return gated_activation<double>(a, b); }, {{"a", a}, {"b", b}}) < kGradTol);
  }
  SUBCASE("dropout with a fixed mask") {
    auto x = leaf({4, 6}, 24);
    CHECK(grad_error([&] {
      Rng rng(5);
      return dropout<double>(x, 0.4, true, rng);
    }, {{"x", x}}) < kGradTol);
  }
  SUBCASE("pooling and reshaping") {
    auto x = leaf({2, 3, 9}, 25);
    CHECK(grad_error([&] { return max_pool1d<double>(x, 3, 2); }, {{"x", x}}) < kGradTol);
    CHECK(grad_error([&] { return global_avg_pool<double>(x); }, {{"x", x}}) < kGradTol);
    CHECK(grad_error([&] { return flatten<double>(x); }, {{"x", x}}) < kGradTol);
  }
  SUBCASE("grouped dilated conv1d") {
    auto x = leaf({2, 4, 10}, 26);
    auto w = leaf({6, 2, 3}, 27);
    auto b = leaf({6}, 28);
    CHECK(grad_error([&] { return conv1d<double>(x, w, b, {2, 2, 2, 1}); },
                     {{"x", x}, {"w", w}, {"b", b}}) < kGradTol);
  }
  SUBCASE("strided conv2d") {
    auto x = leaf({2, 3, 6, 5}, 29);
    auto w = leaf({4, 3, 3, 3}, 30);
    auto b = leaf({4}, 31);
    CHECK(grad_error([&] { return conv2d<double>(x, w, b, {2, 1}); },
                     {{"x", x}, {"w", w}, {"b", b}}) < kGradTol);
  }
  SUBCASE("linear") {
    auto x = leaf({3, 5}, 32);
    auto w = leaf({4, 5}, 33);
    auto b = leaf({4}, 34);
    CHECK(grad_error([&] { return linear<double>(x, w, b); }, {{"x", x}, {"w", w}, {"b", b}}) < kGradTol);
  }
  SUBCASE("batch norm in training and inference mode") {
    auto x = leaf({4, 3, 5}, 35, 2.0);
    auto g = leaf({3}, 36);
    auto b = leaf({3}, 37);
    Tensor<double> rm = random_tensor({3}, 38);
    Tensor<double> rv({3}, 2.0);
    for (bool training : {true, false}) {
      CHECK(grad_error([&] { return batch_norm<double>(x, g, b, rm, rv, training, {}); },
                       {{"x", x}, {"gamma", g}, {"beta", b}}) < kGradTol);
    }
  }
  SUBCASE("lstm returning sequences and the last state") {
    auto x = leaf({2, 3, 5}, 39);
    auto wih = leaf({8, 3}, 40, 0.5);
    auto whh = leaf({8, 2}, 41, 0.5);
    auto b = leaf({8}, 42, 0.5);
    for (bool seq : {true, false}) {
      CHECK(grad_error([&] { return lstm<double>(x, wih, whh, b, seq); },
                       {{"x", x}, {"w_ih", wih}, {"w_hh", whh}, {"bias", b}}) < kGradTol);
    }
  }
  SUBCASE("spectral power") {
    SpectralOperator<double> op;
    op.scales = 3;
    op.length = 6;
    op.real = random_tensor({18, 6}, 43).vec();
    op.imag = random_tensor({18, 6}, 44).vec();
    auto x = leaf({2, 2, 6}, 45);
    CHECK(grad_error([&] { return spectral_power<double>(x, op); }, {{"x", x}}) < kGradTol);
  }
  SUBCASE("losses") {
    auto z = leaf({6, 1}, 46);
    const std::vector<double> t{1, 0, 1, 1, 0, 0};
    const std::vector<double> w{1.0, 2.0, 0.5, 1.0, 3.0, 1.0};
    CHECK(check_gradients([&] { return bce_with_logits<double>(z, t, w); }, {{"z", z}}).max_rel_error < kGradTol);
    auto logits = leaf({4, 5}, 47);
    const std::vector<int> y{0, 3, 4, 3};
    const std::vector<double> cw{1.0, 0.5, 2.0, 1.5, 0.7};
    CHECK(check_gradients([&] { return cross_entropy<double>(logits, y, cw); }, {{"z", logits}})
              .max_rel_error < kGradTol);
  }
}

TEST_CASE("softmax rows sum to one and sigmoid stays inside the unit interval") {
  auto x = constant(random_tensor({16, 52}, 50, 10.0));
  const auto p = softmax<double>(x)->value;
  for (std::size_t r = 0; r < 16; ++r) {
    double s = 0.0;
    for (std::size_t k = 0; k < 52; ++k) s += p[r * 52 + k];
    CHECK(std::abs(s - 1.0) <= 1e-6);
  }
  Tensor<double> z({121});
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = -30.0 + 0.5 * static_cast<double>(i);
  const auto s = sigmoid<double>(constant(z))->value;
  for (double v : s.vec()) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("weight decay scales parameters by (1 - lr * decay) under zero gradients") {
  for (auto kind : {OptimizerKind::adam, OptimizerKind::rmsprop}) {
    auto w = parameter(random_tensor({10}, 51));
    const auto before = w->value.vec();
    OptimizerConfig cfg;
    cfg.kind = kind;
    cfg.learning_rate = 0.01;
    cfg.weight_decay = 0.5;
    Optimizer<double> opt(cfg, {w});
    w->grad = Tensor<double>({10}, 0.0);
    opt.step();
    for (std::size_t i = 0; i < 10; ++i) CHECK(std::abs(w->value[i] - before[i] * (1.0 - 0.005)) <= 1e-9);
  }
}

TEST_CASE("an optimizer step with zero gradients and no decay changes nothing") {
  for (auto kind : {OptimizerKind::adam, OptimizerKind::rmsprop}) {
    auto w = parameter(random_tensor({10}, 52));
    const auto before = w->value.vec();
    OptimizerConfig cfg;
    cfg.kind = kind;
    Optimizer<double> opt(cfg, {w});
    for (int s = 0; s < 3; ++s) {
      w->grad = Tensor<double>({10}, 0.0);
      opt.step();
    }
    CHECK(w->value.vec() == before);
  }
}

TEST_CASE("invalid optimizer settings are rejected") {
  OptimizerConfig cfg;
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = {};
  cfg.weight_decay = -1.0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
}

TEST_CASE("early stopping with patience 3 stops after epoch 5 and keeps epoch 2") {
  EarlyStopping es(3);
  const double losses[] = {1.0, 0.9, 0.91, 0.92, 0.93};
  std::vector<bool> stops;
  for (double l : losses) stops.push_back(es.update(l));
  CHECK(stops == std::vector<bool>{false, false, false, false, true});
  CHECK(es.best_epoch() == 2);
  CHECK(es.best_loss() == 0.9);
}

TEST_CASE("early stopping treats an equal loss as no improvement") {
  EarlyStopping es(1);
  CHECK_FALSE(es.update(1.0));
  CHECK(es.update(1.0));
  CHECK(es.best_epoch() == 1);
}

namespace {

NetSpec small_multiclass_net() {
  NetBuilder b("small", Head::multiclass, 28, 50);
  LayerAttrs bn;
  bn.in = 28;
  auto x = b.add("bn", LayerKind::batch_norm, {0}, bn);
  LayerAttrs conv;
  conv.in = 28;
  conv.out = 56;
  conv.kernel = 5;
  conv.groups = 28;
  x = b.add("conv", LayerKind::conv1d, {x}, conv);
  x = b.add("relu", LayerKind::relu, {x});
  x = b.add("gap", LayerKind::global_avg_pool, {x});
  LayerAttrs out;
  out.in = 56;
  out.out = 52;
  b.add("output", LayerKind::linear, {x}, out);
  return b.build();
}

NetSpec small_binary_net() {
  NetBuilder b("small", Head::binary, 28, 50);
  LayerAttrs conv;
  conv.in = 28;
  conv.out = 28;
  conv.kernel = 3;
  conv.groups = 28;
  auto x = b.add("conv", LayerKind::conv1d, {0}, conv);
  x = b.add("relu", LayerKind::relu, {x});
  x = b.add("flatten", LayerKind::flatten, {x});
  LayerAttrs out;
  out.in = 28 * 48;
  out.out = 1;
  b.add("output", LayerKind::linear, {x}, out);
  return b.build();
}

TrainConfig quick_config(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.seed = seed;
  cfg.max_epochs = 6;
  cfg.patience = 10;
  cfg.optimizer.batch_size = 16;
  cfg.optimizer.learning_rate = 3e-3;
  return cfg;
}

}  // namespace

TEST_CASE("training is bitwise deterministic for a fixed seed") {
  const auto data = test::synthetic_segments(3, 120, preprocess::SegmentMode::multiclass);
  const auto a = train(small_multiclass_net(), data, quick_config(1));
  const auto b = train(small_multiclass_net(), data, quick_config(1));
  const auto c = train(small_multiclass_net(), data, quick_config(2));
  REQUIRE(a.state.size() == b.state.size());
  bool same_as_other_seed = true;
  for (std::size_t i = 0; i < a.state.size(); ++i) {
    CHECK(a.state[i].name == b.state[i].name);
    CHECK(a.state[i].value.vec() == b.state[i].value.vec());
    same_as_other_seed = same_as_other_seed && a.state[i].value.vec() == c.state[i].value.vec();
  }
  CHECK_FALSE(same_as_other_seed);
  CHECK(a.provenance.config_hash == b.provenance.config_hash);
  CHECK(a.provenance.config_hash != c.provenance.config_hash);
}

TEST_CASE("training returns the parameters of the best validation epoch") {
  const auto data = test::synthetic_segments(4, 150, preprocess::SegmentMode::multiclass);
  auto cfg = quick_config(3);
  cfg.use_class_weights = false;
  cfg.max_epochs = 8;
  cfg.optimizer.learning_rate = 2e-2;
  const auto model = train(small_multiclass_net(), data, cfg);
  const auto& hist = model.provenance.val_loss;
  const auto best = std::min_element(hist.begin(), hist.end());
  CHECK(model.provenance.best_epoch == static_cast<std::size_t>(best - hist.begin()) + 1);

  // Recompute the validation loss of the returned parameters.
  const auto n = data.size();
  const auto n_val = static_cast<std::size_t>(std::floor(0.2 * static_cast<double>(n)));
  std::vector<std::size_t> tail(n_val);
  std::iota(tail.begin(), tail.end(), n - n_val);
  const auto val = data.subset(tail);
  const auto p = Classifier(model).probabilities(val);
  double loss = 0.0;
  for (std::size_t i = 0; i < val.size(); ++i) {
    loss -= std::log(p[i * 52 + static_cast<std::size_t>((*val.key_labels())[i])]);
  }
  loss /= static_cast<double>(val.size());
  CHECK(loss == doctest::Approx(*best).epsilon(1e-4));
}

TEST_CASE("training reports divergence with the epoch index") {
  const auto data = test::synthetic_segments(5, 80, preprocess::SegmentMode::binary);
  auto cfg = quick_config(4);
  cfg.optimizer.learning_rate = 1e30;
  try {
    train(small_binary_net(), data, cfg);
    FAIL("expected divergence");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("epoch 1") != std::string::npos);
  }
}

TEST_CASE("training rejects a head that does not match the labels") {
  const auto data = test::synthetic_segments(6, 40, preprocess::SegmentMode::binary);
  CHECK_THROWS_AS(train(small_multiclass_net(), data, quick_config(1)), ConfigError);
}

TEST_CASE("binary training sees all positives and a fresh negative draw each epoch") {
  const auto data = test::synthetic_segments(7, 60, preprocess::SegmentMode::binary);
  auto cfg = quick_config(5);
  cfg.max_epochs = 2;
  const auto model = train(small_binary_net(), data, cfg);
  CHECK(model.provenance.epochs_run == 2);
  CHECK(model.provenance.val_loss.size() == 2);
  CHECK(std::isfinite(model.provenance.val_loss[1]));
}

TEST_CASE("model files round-trip bit for bit") {
  const auto data = test::synthetic_segments(8, 80, preprocess::SegmentMode::multiclass);
  const auto model = train(small_multiclass_net(), data, quick_config(6));
  const auto path = std::filesystem::temp_directory_path() / "emgkey_roundtrip.ksnet";
  save_model(model, path);
  const auto back = load_model(path);
  CHECK(back.spec == model.spec);
  CHECK(back.precision == model.precision);
  CHECK(back.provenance.seed == model.provenance.seed);
  CHECK(back.provenance.config_hash == model.provenance.config_hash);
  CHECK(back.provenance.best_epoch == model.provenance.best_epoch);
  REQUIRE(back.state.size() == model.state.size());
  for (std::size_t i = 0; i < back.state.size(); ++i) {
    CHECK(back.state[i].name == model.state[i].name);
    CHECK(back.state[i].value.vec() == model.state[i].value.vec());
  }
  CHECK(Classifier(back).probabilities(data).vec() == Classifier(model).probabilities(data).vec());

  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.write("XXXX", 4);
  }
  CHECK_THROWS_AS(load_model(path), DataError);
  save_model(model, path);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 3);
  CHECK_THROWS_AS(load_model(path), DataError);
  std::filesystem::remove(path);
}

TEST_CASE("parallel inference gives the same probabilities as serial inference") {
  const auto data = test::synthetic_segments(9, 80, preprocess::SegmentMode::binary);
  const auto model = train(small_binary_net(), data, quick_config(7));
  const Classifier clf(model);
  CHECK(clf.probabilities(data, 1, 64).vec() == clf.probabilities(data, 3, 64).vec());
}

TEST_CASE("shape errors name the layer and the shapes") {
  NetSpec spec = small_multiclass_net();
  spec.nodes.back().attrs.in = 57;
  try {
    infer_shapes(spec);
    FAIL("expected a shape error");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("output") != std::string::npos);
    CHECK(msg.find("[56]") != std::string::npos);
  }
  auto x = constant(Tensor<double>({2, 3}));
  auto w = constant(Tensor<double>({4, 5}));
  CHECK_THROWS_AS(linear<double>(x, w, nullptr), ShapeError);
}

TEST_CASE("netspec json round-trips") {
  const auto spec = small_multiclass_net();
  CHECK(netspec_from_json(to_json(spec)) == spec);
  CHECK_THROWS_AS(netspec_from_json(nlohmann::json{{"architecture", "x"}}), ConfigError);
}

TEST_CASE("participant folds are disjoint and cover everyone once") {
  const std::vector<std::string> ids{"p1", "p2", "p3", "p4", "p5", "p6", "p3", "p1"};
  const auto folds = participant_folds(ids, 3, 11);
  REQUIRE(folds.size() == 3);
  std::multiset<std::string> seen;
  for (const auto& f : folds) {
    CHECK(f.size() == 2);
    seen.insert(f.begin(), f.end());
  }
  CHECK(seen == std::multiset<std::string>{"p1", "p2", "p3", "p4", "p5", "p6"});
  CHECK(participant_folds(ids, 3, 11) == folds);
  CHECK_THROWS_AS(participant_folds({"a", "b"}, 3, 1), ConfigError);
}

TEST_CASE("hyper_search samples reproducibly and ranks by mean F1") {
  SearchSpace space;
  space.params.push_back({"lr", ParamRange::Kind::log_uniform, {}, 1e-4, 1e-1});
  space.params.push_back({"batch", ParamRange::Kind::choice, {16, 32, 64}, 0, 0});
  space.params.push_back({"decay", ParamRange::Kind::uniform, {}, 0.0, 0.01});
  const auto a = sample_configs(space, 8, 3);
  CHECK(a == sample_configs(space, 8, 3));
  CHECK(a != sample_configs(space, 8, 4));
  for (const auto& c : a) {
    CHECK(c.at("lr") >= 1e-4);
    CHECK(c.at("lr") <= 1e-1);
    CHECK(std::set<double>{16, 32, 64}.contains(c.at("batch")));
  }

  std::vector<SegmentBatch> parts;
  for (int p = 0; p < 6; ++p) {
    parts.push_back(test::synthetic_segments(20 + p, 10, preprocess::SegmentMode::multiclass,
                                             "p" + std::to_string(p)));
  }
  const auto data = SegmentBatch::concat(parts);
  std::vector<std::set<std::string>> val_groups;
  std::vector<double> reported;
  auto scorer = [&](const SampledConfig& c, const SegmentBatch& tr, const SegmentBatch& va) {
    std::set<std::string> vp, tp;
    for (std::size_t i = 0; i < va.size(); ++i) vp.insert(va.source_of(i).meta.participant);
    for (std::size_t i = 0; i < tr.size(); ++i) tp.insert(tr.source_of(i).meta.participant);
    for (const auto& p : vp) CHECK_FALSE(tp.contains(p));
    val_groups.push_back(vp);
    return c.at("lr") * 10.0 + c.at("decay");
  };
  const auto results = hyper_search(space, 5, data, scorer, 3);
  REQUIRE(results.size() == 5);
  for (std::size_t i = 1; i < results.size(); ++i) CHECK(results[i - 1].mean_f1 >= results[i].mean_f1);
  double best = -1.0;
  for (const auto& r : results) best = std::max(best, r.mean_f1);
  CHECK(results.front().mean_f1 == best);
  // Each participant validates in exactly one fold.
  std::multiset<std::string> once;
  for (std::size_t f = 0; f < 3; ++f) once.insert(val_groups[f].begin(), val_groups[f].end());
  CHECK(once.size() == 6);
  CHECK(std::set<std::string>(once.begin(), once.end()).size() == 6);

  const auto few = SegmentBatch::concat(std::vector<SegmentBatch>(parts.begin(), parts.begin() + 2));
  CHECK_THROWS_AS(hyper_search(space, 2, few, scorer, 3), ConfigError);
}
