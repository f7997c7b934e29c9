#pragma once

#include "emgkey/arch/cwt.hpp"
#include "emgkey/nn/netspec.hpp"

#include <array>
#include <string_view>
#include <vector>

namespace emgkey::arch {

enum class Architecture { tsc_resnet11, cwt_resnet18, crnn, tsc_wavenet };

std::string_view to_string(Architecture a);
/// Throws ConfigError for unknown names.
Architecture parse_architecture(std::string_view name);
const std::vector<Architecture>& all_architectures();

/// Three residual blocks of grouped convolutions (kernels 8, 5, 3) with
/// batch norm, then global average pooling and the output layer.
struct ResNet11Options {
  std::size_t groups = 28;
  /// Total filters per block; each must be divisible by groups.
  std::array<std::size_t, 3> filters{224, 448, 448};
};

/// Batch norm, fixed CWT power spectrum per channel, then a pre-activation
/// 2-D ResNet18 without the early max pool.
struct ResNet18Options {
  std::size_t initial_filters = 32;
  CwtConfig cwt;
  /// Keeps the input batch norm at its initial affine parameters.
  bool freeze_input_norm = false;
};

struct CrnnOptions {
  std::size_t groups = 28;
  std::size_t filters_per_group = 16;
  std::size_t kernel = 2;
  std::size_t units = 64;
  double dropout = 0.4;
};

struct WaveNetOptions {
  std::size_t groups = 28;
  std::size_t filters_per_group = 16;
  std::vector<std::size_t> dilations{1, 2};
};

nn::NetSpec build_tsc_resnet11(nn::Head head, const ResNet11Options& opts = {});
nn::NetSpec build_cwt_resnet18(nn::Head head, const ResNet18Options& opts = {});
nn::NetSpec build_crnn(nn::Head head, const CrnnOptions& opts = {});
nn::NetSpec build_tsc_wavenet(nn::Head head, const WaveNetOptions& opts = {});

/// Default configuration of an architecture.
nn::NetSpec build(Architecture arch, nn::Head head);

}  // namespace emgkey::arch
