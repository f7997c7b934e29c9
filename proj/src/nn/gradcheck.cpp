#include "emgkey/nn/gradcheck.hpp"

#include "emgkey/core/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace emgkey::nn {

GradCheckReport check_gradients(const std::function<Var<double>()>& loss,
                                const std::vector<std::pair<std::string, Var<double>>>& wrt,
                                const GradCheckOptions& opts) {
  for (const auto& [name, v] : wrt) {
    v->requires_grad = true;
    v->grad = Tensor<double>();
  }
  const auto base = loss();
  const double f0 = base->value[0];
  backward(base);
  GradCheckReport report;
  Rng rng = Rng::derive(opts.seed, 0x6C);
  for (const auto& [name, v] : wrt) {
    const auto analytic = v->grad.size() == v->value.size() ? v->grad : Tensor<double>(v->value.shape());
    double scale = 0.0;
    for (double g : analytic.vec()) scale = std::max(scale, std::abs(g));
    std::vector<std::size_t> coords(v->value.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (opts.max_coords > 0 && coords.size() > opts.max_coords) {
      rng.shuffle(coords.begin(), coords.end());
      coords.resize(opts.max_coords);
      std::sort(coords.begin(), coords.end());
    }
    for (auto i : coords) {
      const double orig = v->value[i];
      double plus = 0.0;
      double minus = 0.0;
      {
        NoGradGuard guard;
        v->value[i] = orig + opts.eps;
        plus = loss()->value[0];
        v->value[i] = orig - opts.eps;
        minus = loss()->value[0];
        v->value[i] = orig;
      }
      const double numeric = (plus - minus) / (2.0 * opts.eps);
      const double a = analytic[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-3 * scale, 1e-10});
      if (opts.skip_kinks) {
        const double bend = std::abs((plus - f0) - (f0 - minus)) / opts.eps;
        if (bend > opts.kink_tol * denom) {
          ++report.skipped;
          continue;
        }
      }
      const double rel = std::abs(a - numeric) / denom;
      ++report.coordinates;
      if (report.worst.empty() || rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst = name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return report;
}

GradCheckReport check_network_gradients(const NetSpec& spec, std::size_t batch,
                                        const GradCheckOptions& opts) {
  Network<double> net(spec, opts.seed);
  const auto shapes = infer_shapes(spec);
  Rng rng = Rng::derive(opts.seed, 0x1A);
  for (auto& [name, p] : net.parameters()) {
    const auto suffix = name.substr(name.rfind('.') + 1);
    if (suffix != "gamma" && suffix != "beta" && suffix != "bias") continue;
    for (auto& v : p->value.vec()) v += rng.uniform(-0.25, 0.25);
  }
  Tensor<double> x({batch, shapes[0][0], shapes[0][1]});
  for (auto& v : x.vec()) v = rng.normal();
  auto input = parameter(std::move(x));
  std::vector<double> targets;
  std::vector<int> labels;
  for (std::size_t b = 0; b < batch; ++b) {
    targets.push_back(static_cast<double>(b % 2));
    labels.push_back(static_cast<int>(rng.index(head_outputs(spec.head))));
  }
  auto loss = [&]() {
    net.set_dropout_seed(opts.seed);
    auto logits = net.forward(input, true);
    if (spec.head == Head::binary) return bce_with_logits<double>(logits, targets, {});
    return cross_entropy<double>(logits, labels, {});
  };
  std::vector<std::pair<std::string, Var<double>>> wrt{{"input", input}};
  for (auto& p : net.parameters()) {
    if (p.second->requires_grad) wrt.push_back(p);
  }
  return check_gradients(loss, wrt, opts);
}

}  // namespace emgkey::nn
