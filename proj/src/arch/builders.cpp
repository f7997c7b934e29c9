#include "emgkey/arch/builders.hpp"

#include "emgkey/core/error.hpp"
#include "emgkey/core/segments.hpp"

#include <string>

namespace emgkey::arch {
namespace {

using nn::LayerAttrs;
using nn::LayerKind;
using nn::NetBuilder;

LayerAttrs conv1d(std::size_t in, std::size_t out, std::size_t kernel, std::size_t groups,
                  std::size_t pad_left, std::size_t pad_right, std::size_t dilation = 1,
                  bool bias = true) {
  LayerAttrs a;
  a.in = in;
  a.out = out;
  a.kernel = kernel;
  a.groups = groups;
  a.pad_left = pad_left;
  a.pad_right = pad_right;
  a.dilation = dilation;
  a.bias = bias;
  return a;
}

/// 'same' padding for stride 1: the extra sample of an even kernel goes right.
LayerAttrs conv1d_same(std::size_t in, std::size_t out, std::size_t kernel, std::size_t groups) {
  return conv1d(in, out, kernel, groups, (kernel - 1) / 2, kernel / 2, 1, false);
}

LayerAttrs conv2d(std::size_t in, std::size_t out, std::size_t kernel, std::size_t stride,
                  std::size_t pad) {
  LayerAttrs a;
  a.in = in;
  a.out = out;
  a.kernel = kernel;
  a.stride = stride;
  a.pad_left = pad;
  a.bias = false;
  return a;
}

LayerAttrs norm(std::size_t channels) {
  LayerAttrs a;
  a.in = channels;
  return a;
}

LayerAttrs dense(std::size_t in, std::size_t out) {
  LayerAttrs a;
  a.in = in;
  a.out = out;
  return a;
}

}  // namespace

std::string_view to_string(Architecture a) {
  switch (a) {
    case Architecture::tsc_resnet11: return "tsc_resnet11";
    case Architecture::cwt_resnet18: return "cwt_resnet18";
    case Architecture::crnn: return "crnn";
    case Architecture::tsc_wavenet: return "tsc_wavenet";
  }
  return "?";
}

Architecture parse_architecture(std::string_view name) {
  for (auto a : all_architectures()) {
    if (to_string(a) == name) return a;
  }
  throw ConfigError("unknown architecture '" + std::string(name) +
                    "' (expected tsc_resnet11, cwt_resnet18, crnn or tsc_wavenet)");
}

const std::vector<Architecture>& all_architectures() {
  static const std::vector<Architecture> all{Architecture::tsc_resnet11, Architecture::cwt_resnet18,
                                             Architecture::crnn, Architecture::tsc_wavenet};
  return all;
}

nn::NetSpec build_tsc_resnet11(nn::Head head, const ResNet11Options& opts) {
  NetBuilder b("tsc_resnet11", head, kFusedChannels, kWindowLength);
  constexpr std::array<std::size_t, 3> kernels{8, 5, 3};
  std::size_t x = 0;
  std::size_t width = kFusedChannels;
  for (std::size_t blk = 0; blk < 3; ++blk) {
    const auto out = opts.filters[blk];
    const auto p = "block" + std::to_string(blk + 1) + ".";
    std::size_t h = x;
    std::size_t in = width;
    for (std::size_t c = 0; c < 3; ++c) {
      const auto q = p + "conv" + std::to_string(c + 1);
      h = b.add(q, LayerKind::conv1d, {h}, conv1d_same(in, out, kernels[c], opts.groups));
      h = b.add(q + ".bn", LayerKind::batch_norm, {h}, norm(out));
      if (c < 2) h = b.add(q + ".relu", LayerKind::relu, {h});
      in = out;
    }
    std::size_t shortcut = x;
    if (width != out) {
      shortcut = b.add(p + "shortcut", LayerKind::conv1d, {x},
                       conv1d(width, out, 1, opts.groups, 0, 0, 1, false));
    }
    shortcut = b.add(p + "shortcut.bn", LayerKind::batch_norm, {shortcut}, norm(out));
    x = b.add(p + "add", LayerKind::add, {h, shortcut});
    x = b.add(p + "out", LayerKind::relu, {x});
    width = out;
  }
  x = b.add("gap", LayerKind::global_avg_pool, {x});
  b.add("output", LayerKind::linear, {x}, dense(width, nn::head_outputs(head)));
  return b.build();
}

nn::NetSpec build_cwt_resnet18(nn::Head head, const ResNet18Options& opts) {
  validate(opts.cwt);
  NetBuilder b("cwt_resnet18", head, kFusedChannels, kWindowLength);
  auto in_norm = norm(kFusedChannels);
  in_norm.trainable = !opts.freeze_input_norm;
  std::size_t x = b.add("input_bn", LayerKind::batch_norm, {0}, in_norm);
  LayerAttrs cwt;
  cwt.w0 = opts.cwt.w0;
  cwt.dj = opts.cwt.dj;
  cwt.dt = opts.cwt.dt;
  cwt.scales = opts.cwt.scale_count;
  x = b.add("cwt", LayerKind::cwt, {x}, cwt);
  std::size_t width = opts.initial_filters;
  x = b.add("stem", LayerKind::conv2d, {x}, conv2d(kFusedChannels, width, 3, 1, 1));
  for (std::size_t stage = 0; stage < 4; ++stage) {
    const auto out = opts.initial_filters << stage;
    for (std::size_t blk = 0; blk < 2; ++blk) {
      const auto stride = (stage > 0 && blk == 0) ? 2 : 1;
      const auto p = "stage" + std::to_string(stage + 1) + ".block" + std::to_string(blk + 1) + ".";
      auto a = b.add(p + "bn1", LayerKind::batch_norm, {x}, norm(width));
      a = b.add(p + "relu1", LayerKind::relu, {a});
      auto h = b.add(p + "conv1", LayerKind::conv2d, {a}, conv2d(width, out, 3, stride, 1));
      h = b.add(p + "bn2", LayerKind::batch_norm, {h}, norm(out));
      h = b.add(p + "relu2", LayerKind::relu, {h});
      h = b.add(p + "conv2", LayerKind::conv2d, {h}, conv2d(out, out, 3, 1, 1));
      std::size_t shortcut = x;
      if (stride != 1 || width != out) {
        shortcut = b.add(p + "shortcut", LayerKind::conv2d, {a}, conv2d(width, out, 1, stride, 0));
      }
      x = b.add(p + "add", LayerKind::add, {h, shortcut});
      width = out;
    }
  }
  x = b.add("final_bn", LayerKind::batch_norm, {x}, norm(width));
  x = b.add("final_relu", LayerKind::relu, {x});
  x = b.add("gap", LayerKind::global_avg_pool, {x});
  b.add("output", LayerKind::linear, {x}, dense(width, nn::head_outputs(head)));
  return b.build();
}

nn::NetSpec build_crnn(nn::Head head, const CrnnOptions& opts) {
  NetBuilder b("crnn", head, kFusedChannels, kWindowLength);
  const auto filters = opts.groups * opts.filters_per_group;
  std::size_t x = b.add("input_bn", LayerKind::batch_norm, {0}, norm(kFusedChannels));
  x = b.add("conv", LayerKind::conv1d, {x},
            conv1d(kFusedChannels, filters, opts.kernel, opts.groups, 0, 0));
  x = b.add("conv.relu", LayerKind::relu, {x});
  x = b.add("conv.bn", LayerKind::batch_norm, {x}, norm(filters));
  LayerAttrs l1;
  l1.in = filters;
  l1.units = opts.units;
  l1.return_sequences = true;
  x = b.add("lstm1", LayerKind::lstm, {x}, l1);
  LayerAttrs l2;
  l2.in = opts.units;
  l2.units = opts.units;
  x = b.add("lstm2", LayerKind::lstm, {x}, l2);
  LayerAttrs drop;
  drop.p = opts.dropout;
  x = b.add("dropout", LayerKind::dropout, {x}, drop);
  b.add("output", LayerKind::linear, {x}, dense(opts.units, nn::head_outputs(head)));
  return b.build();
}

nn::NetSpec build_tsc_wavenet(nn::Head head, const WaveNetOptions& opts) {
  NetBuilder b("tsc_wavenet", head, kFusedChannels, kWindowLength);
  const auto g = opts.groups;
  const auto w = g * opts.filters_per_group;
  std::size_t x = b.add("input_bn", LayerKind::batch_norm, {0}, norm(kFusedChannels));
  x = b.add("adapter", LayerKind::conv1d, {x}, conv1d(kFusedChannels, w, 1, g, 0, 0));
  std::vector<std::size_t> skips;
  for (std::size_t i = 0; i < opts.dilations.size(); ++i) {
    const auto d = opts.dilations[i];
    const auto p = "block" + std::to_string(i + 1) + ".";
    // Causal: all padding on the left.
    const auto f = b.add(p + "filter", LayerKind::conv1d, {x}, conv1d(w, w, 2, g, d, 0, d));
    const auto gt = b.add(p + "gate", LayerKind::conv1d, {x}, conv1d(w, w, 2, g, d, 0, d));
    const auto z = b.add(p + "gated", LayerKind::gated, {f, gt});
    const auto res = b.add(p + "residual", LayerKind::conv1d, {z}, conv1d(w, w, 1, g, 0, 0));
    skips.push_back(b.add(p + "skip", LayerKind::conv1d, {z}, conv1d(w, w, 1, g, 0, 0)));
    x = b.add(p + "out", LayerKind::add, {x, res});
  }
  std::size_t h = skips.size() == 1 ? skips[0] : b.add("skip_sum", LayerKind::add, skips);
  h = b.add("head.relu1", LayerKind::relu, {h});
  h = b.add("head.conv1", LayerKind::conv1d, {h}, conv1d(w, w, 1, g, 0, 0));
  h = b.add("head.relu2", LayerKind::relu, {h});
  h = b.add("head.conv2", LayerKind::conv1d, {h}, conv1d(w, kFusedChannels, 1, g, 0, 0));
  h = b.add("flatten", LayerKind::flatten, {h});
  b.add("output", LayerKind::linear, {h},
        dense(kFusedChannels * kWindowLength, nn::head_outputs(head)));
  return b.build();
}

nn::NetSpec build(Architecture arch, nn::Head head) {
  switch (arch) {
    case Architecture::tsc_resnet11: return build_tsc_resnet11(head);
    case Architecture::cwt_resnet18: return build_cwt_resnet18(head);
    case Architecture::crnn: return build_crnn(head);
    case Architecture::tsc_wavenet: return build_tsc_wavenet(head);
  }
  throw ConfigError("unknown architecture");
}

}  // namespace emgkey::arch
