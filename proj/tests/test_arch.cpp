#include "emgkey/arch/builders.hpp"
#include "emgkey/arch/cwt.hpp"
#include "emgkey/core/random.hpp"
#include "emgkey/nn/gradcheck.hpp"
#include "emgkey/nn/network.hpp"
#include "emgkey/nn/train.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

using namespace emgkey;
using namespace emgkey::arch;
using namespace emgkey::nn;

namespace {

constexpr std::size_t N = kWindowLength;

std::vector<double> sine(double period, double dt) {
  std::vector<double> x(N);
  for (std::size_t n = 0; n < N; ++n) {
    x[n] = std::sin(2.0 * std::numbers::pi * static_cast<double>(n) * dt / period);
  }
  return x;
}

// Direct quadrature of the Morlet transform at one sample:
// W_n(s) = sum_m x_m sqrt(dt/s) conj(psi0((m - n) dt / s)).
double direct_power(const std::vector<double>& x, std::size_t n, double s, const CwtConfig& cfg) {
  std::complex<double> w = 0.0;
  const double norm = std::sqrt(cfg.dt / s) * std::pow(std::numbers::pi, -0.25);
  for (std::size_t m = 0; m < x.size(); ++m) {
    const double eta = (static_cast<double>(m) - static_cast<double>(n)) * cfg.dt / s;
    w += x[m] * norm * std::exp(std::complex<double>(-0.5 * eta * eta, -cfg.w0 * eta));
  }
  return std::norm(w);
}

std::size_t row_argmax(const std::vector<double>& p, std::size_t rows, std::size_t col) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < rows; ++j) {
    if (p[j * N + col] > p[best * N + col]) best = j;
  }
  return best;
}

Tensor<double> random_input(std::size_t batch, std::uint64_t seed) {
  Tensor<double> x({batch, kFusedChannels, N});
  Rng rng(seed);
  for (auto& v : x.vec()) v = rng.normal();
  return x;
}

std::size_t node_index(const NetSpec& spec, std::string_view name) { return find_node(spec, name); }

// Recounted from the returned model rather than taken from the trainer.
double accuracy(const TrainedNet& model, const SegmentBatch& data) {
  const auto probs = Classifier(model).probabilities(data);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (model.spec.head == Head::binary) {
      correct += (probs[i] >= 0.5) == ((*data.binary_labels())[i] != 0);
    } else {
      const double* row = probs.data() + i * kKeyCount;
      const auto best = std::max_element(row, row + kKeyCount) - row;
      correct += best == (*data.key_labels())[i];
    }
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace

TEST_CASE("cwt of a zero signal is zero with one row per scale") {
  const CwtConfig cfg;
  const auto p = cwt_power(std::vector<double>(N, 0.0), cfg);
  CHECK(p.size() == 38 * N);
  CHECK(std::all_of(p.begin(), p.end(), [](double v) { return v == 0.0; }));
  CHECK(dyadic_scale_count(N, cfg) == 38);
  CHECK(cwt_scales(cfg).size() == 38);
}

TEST_CASE("a sine at the Fourier period of a scale peaks on that scale") {
  const CwtConfig cfg;
  const auto scales = cwt_scales(cfg);
  const std::size_t mid = N / 2;
  const double half_window = static_cast<double>(mid) * cfg.dt;
  std::size_t checked = 0;
  for (std::size_t j = 0; j < scales.size(); ++j) {
    // Interior: the wavelet's e-folding time fits between the centre and either edge.
    if (std::sqrt(2.0) * scales[j] > half_window) continue;
    const auto x = sine(fourier_period(scales[j], cfg.w0), cfg.dt);
    std::vector<double> direct(scales.size() * N, 0.0);
    for (std::size_t k = 0; k < scales.size(); ++k) direct[k * N + mid] = direct_power(x, mid, scales[k], cfg);
    CAPTURE(j);
    CHECK(row_argmax(direct, scales.size(), mid) == j);
    CHECK(row_argmax(cwt_power(x, cfg), scales.size(), mid) == j);
    ++checked;
  }
  CHECK(checked >= 20);
}

TEST_CASE("the fft transform agrees with direct quadrature inside the cone of influence") {
  const CwtConfig cfg;
  const auto scales = cwt_scales(cfg);
  Rng rng(5);
  std::vector<double> x(N);
  for (auto& v : x) v = rng.normal();
  const auto p = cwt_power(x, cfg);
  double worst = 0.0;
  for (std::size_t j = 0; j < scales.size(); ++j) {
    // Direct quadrature aliases once the Fourier period drops below four samples.
    if (fourier_period(scales[j], cfg.w0) < 4.0 * cfg.dt) continue;
    const double coi = std::sqrt(2.0) * scales[j] / cfg.dt;
    for (std::size_t n = 0; n < N; ++n) {
      const double edge = std::min(static_cast<double>(n), static_cast<double>(N - 1 - n));
      if (coi > edge) continue;
      const double ref = direct_power(x, n, scales[j], cfg);
      worst = std::max(worst, std::abs(p[j * N + n] - ref) / std::max(ref, 1e-3));
    }
  }
  MESSAGE("max relative deviation inside the cone: " << worst);
  CHECK(worst < 1e-3);
}

TEST_CASE("cwt power scales with the square of the amplitude") {
  const CwtConfig cfg;
  Rng rng(6);
  std::vector<double> x(N);
  for (auto& v : x) v = rng.normal();
  const double a = 3.7;
  std::vector<double> ax(x);
  for (auto& v : ax) v *= a;
  const auto p = cwt_power(x, cfg);
  const auto q = cwt_power(ax, cfg);
  double worst = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    worst = std::max(worst, std::abs(q[i] - a * a * p[i]) / std::max(a * a * p[i], 1e-300));
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("cwt rejects non-finite input and invalid settings") {
  const CwtConfig cfg;
  std::vector<double> x(N, 0.0);
  x[3] = std::nan("");
  CHECK_THROWS_AS(cwt_power(x, cfg), DataError);
  CwtConfig bad;
  bad.dj = 0.0;
  CHECK_THROWS_AS(validate(bad), ConfigError);
}

TEST_CASE("the spectral operator reproduces cwt_power") {
  const CwtConfig cfg;
  const auto op = cwt_operator<double>(N, cfg);
  Rng rng(8);
  Tensor<double> x({1, 1, N});
  for (auto& v : x.vec()) v = rng.normal();
  const auto y = spectral_power<double>(constant(x), op)->value;
  const auto ref = cwt_power(x.values(), cfg);
  REQUIRE(y.size() == ref.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    worst = std::max(worst, std::abs(y[i] - ref[i]) / std::max(ref[i], 1e-12));
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("every architecture maps a segment batch to its head") {
  for (auto arch : all_architectures()) {
    CAPTURE(to_string(arch));
    for (auto head : {Head::binary, Head::multiclass}) {
      const auto spec = build(arch, head);
      Network<double> net(spec, 1);
      const std::size_t b = arch == Architecture::cwt_resnet18 ? 2 : 4;
      const auto y = net.forward(constant(random_input(b, 2)), false)->value;
      CHECK(y.shape() == Shape{b, head_outputs(head)});
      CHECK(parse_architecture(to_string(arch)) == arch);
    }
  }
  CHECK_THROWS_AS(parse_architecture("lenet"), ConfigError);
}

TEST_CASE("tsc resnet11 uses grouped filters of 224, 448 and 448") {
  const auto spec = build_tsc_resnet11(Head::multiclass);
  const auto shapes = infer_shapes(spec);
  CHECK(shapes[node_index(spec, "block1.out")] == Shape{224, N});
  CHECK(shapes[node_index(spec, "block2.out")] == Shape{448, N});
  CHECK(shapes[node_index(spec, "block3.out")] == Shape{448, N});
  for (std::string_view c : {"block1.conv1", "block2.conv2", "block3.conv3"}) {
    CHECK(spec.nodes[node_index(spec, c)].attrs.groups == 28);
  }
  CHECK(spec.nodes[node_index(spec, "block1.conv1")].attrs.kernel == 8);
  CHECK(spec.nodes[node_index(spec, "block1.conv2")].attrs.kernel == 5);
  CHECK(spec.nodes[node_index(spec, "block1.conv3")].attrs.kernel == 3);

  ResNet11Options dense;
  dense.groups = 1;
  CHECK(parameter_count(build_tsc_resnet11(Head::multiclass, dense)) > parameter_count(spec));
  CHECK(Network<float>(spec, 0).parameter_count() == parameter_count(spec));
}

TEST_CASE("cwt resnet18 feeds a 38-scale spectrum per channel to a 32-filter stem") {
  const auto spec = build_cwt_resnet18(Head::binary);
  Network<double> net(spec, 3);
  const auto acts = net.forward_all(constant(random_input(2, 4)), false);
  CHECK(acts[node_index(spec, "cwt")]->value.shape() == Shape{2, 28, 38, N});
  CHECK(acts[node_index(spec, "stem")]->value.shape()[1] == 32);
  CHECK(acts.back()->value.shape() == Shape{2, 1});
  // Eight residual blocks of two convolutions each.
  std::size_t convs = 0;
  for (const auto& n : spec.nodes) {
    if (n.kind == LayerKind::conv2d && n.name.find("conv") != std::string::npos) ++convs;
  }
  CHECK(convs == 16);

  ResNet18Options frozen;
  frozen.freeze_input_norm = true;
  const Network<double> fnet(build_cwt_resnet18(Head::binary, frozen), 3);
  for (const auto& [name, v] : fnet.parameters()) {
    if (name.rfind("input_bn.", 0) == 0) CHECK_FALSE(v->requires_grad);
  }
}

TEST_CASE("crnn has a 448-filter grouped convolution and deterministic inference") {
  const auto spec = build_crnn(Head::binary);
  const auto& conv = spec.nodes[node_index(spec, "conv")];
  CHECK(conv.attrs.out == 448);
  CHECK(conv.attrs.groups == 28);
  CHECK(conv.attrs.kernel == 2);
  Network<double> net(spec, 5);
  const auto x = constant(random_input(8, 6));
  const auto a = net.forward(x, false)->value;
  const auto b = net.forward(x, false)->value;
  CHECK(a.shape() == Shape{8, 1});
  CHECK(a.vec() == b.vec());
  net.set_dropout_seed(1);
  const auto t1 = net.forward(x, true)->value;
  net.set_dropout_seed(2);
  const auto t2 = net.forward(x, true)->value;
  CHECK(t1.vec() != t2.vec());
}

TEST_CASE("wavenet stacks dilations and sums its skip connections") {
  const auto spec = build_tsc_wavenet(Head::multiclass);
  CHECK(spec.nodes[node_index(spec, "block1.filter")].attrs.dilation == 1);
  CHECK(spec.nodes[node_index(spec, "block2.filter")].attrs.dilation == 2);
  CHECK(receptive_field(spec, node_index(spec, "block2.out")) >
        receptive_field(spec, node_index(spec, "block1.out")));
  CHECK(receptive_field(spec, node_index(spec, "block1.out")) == 2);
  CHECK(receptive_field(spec, node_index(spec, "block2.out")) == 4);

  Network<double> net(spec, 7);
  for (auto& [name, v] : net.parameters()) {
    if (name.rfind("block", 0) == 0 && name.find(".skip.") != std::string::npos) v->value.fill(0.0);
  }
  const auto acts = net.forward_all(constant(random_input(3, 8)), false);
  for (std::string_view n : {"skip_sum", "head.relu1"}) {
    const auto& v = acts[node_index(spec, n)]->value.vec();
    CHECK(std::all_of(v.begin(), v.end(), [](double e) { return e == 0.0; }));
  }
  // Residual path is unaffected by the skip weights.
  double energy = 0.0;
  for (double v : acts[node_index(spec, "block2.out")]->value.vec()) energy += v * v;
  CHECK(energy > 0.0);
}

TEST_CASE("end-to-end gradients of every architecture match central differences") {
  GradCheckOptions opts;
  opts.max_coords = 6;
  opts.seed = 12;
  opts.skip_kinks = true;
  for (auto arch : all_architectures()) {
    for (auto head : {Head::binary, Head::multiclass}) {
      CAPTURE(to_string(arch));
      CAPTURE(to_string(head));
      auto spec = build(arch, head);
      if (arch == Architecture::cwt_resnet18) {
        // Same topology at a width where +-eps rarely crosses a ReLU kink.
        ResNet18Options narrow;
        narrow.initial_filters = 8;
        narrow.cwt.scale_count = 8;
        spec = build_cwt_resnet18(head, narrow);
      }
      const auto report = check_network_gradients(spec, arch == Architecture::cwt_resnet18 ? 2 : 3, opts);
      MESSAGE(to_string(arch) << "/" << to_string(head) << " worst " << report.worst << " "
                              << report.max_rel_error << ", " << report.skipped << " of "
                              << report.coordinates + report.skipped << " coordinates at a kink");
      CHECK(report.max_rel_error < 1e-4);
      CHECK(report.skipped * 4 <= report.coordinates + report.skipped);
    }
  }
}

TEST_CASE("every architecture overfits 32 segments with either head") {
  const auto all_bin = test::synthetic_segments(31, 60, preprocess::SegmentMode::binary);
  std::vector<std::size_t> pick;
  std::size_t pos = 0, neg = 0;
  const auto& bl = *all_bin.binary_labels();
  for (std::size_t i = 0; i < all_bin.size() && pick.size() < 32; ++i) {
    if (bl[i] ? pos++ < 16 : neg++ < 16) pick.push_back(i);
  }
  REQUIRE(pick.size() == 32);
  const auto binary = all_bin.subset(pick);
  const auto all_mc = test::synthetic_segments(32, 60, preprocess::SegmentMode::multiclass);
  std::vector<std::size_t> first(32);
  for (std::size_t i = 0; i < 32; ++i) first[i] = i;
  const auto multiclass = all_mc.subset(first);

  TrainConfig cfg;
  cfg.seed = 3;
  cfg.max_epochs = 500;
  cfg.patience = 500;
  cfg.optimizer.learning_rate = 3e-3;
  cfg.optimizer.batch_size = 16;
  cfg.subsample_majority = false;
  cfg.use_class_weights = false;
  cfg.target_train_accuracy = 0.99;
  for (auto arch : all_architectures()) {
    for (auto head : {Head::binary, Head::multiclass}) {
      CAPTURE(to_string(arch));
      CAPTURE(to_string(head));
      const auto& data = head == Head::binary ? binary : multiclass;
      const auto model = train(build(arch, head), data, cfg, &data);
      MESSAGE(to_string(arch) << "/" << to_string(head) << " reached the target after "
                              << model.provenance.epochs_run << " epochs");
      CHECK(model.provenance.stop_reason == "target_accuracy");
      CHECK(model.provenance.epochs_run <= 500);
      CHECK(accuracy(model, data) >= 0.99);
    }
  }
}

TEST_CASE("architecture specs survive a json round trip") {
  for (auto arch : all_architectures()) {
    const auto spec = build(arch, Head::multiclass);
    CHECK(netspec_from_json(to_json(spec)) == spec);
  }
}
