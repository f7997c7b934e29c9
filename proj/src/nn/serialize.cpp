#include "emgkey/nn/serialize.hpp"

#include "emgkey/core/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace emgkey::nn {
namespace {

static_assert(std::endian::native == std::endian::little, "model files assume a little-endian host");

constexpr char kMagic[8] = {'E', 'M', 'G', 'K', 'N', 'E', 'T', '1'};

template <class U>
void put(std::ostream& os, U v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class U>
U get(std::istream& is, const std::string& what) {
  U v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw DataError("model file: truncated " + what);
  return v;
}

}  // namespace

nlohmann::json to_json(const TrainingProvenance& p) {
  return {{"seed", p.seed},
          {"config_hash", p.config_hash},
          {"best_epoch", p.best_epoch},
          {"epochs_run", p.epochs_run},
          {"best_val_loss", p.best_val_loss},
          {"stop_reason", p.stop_reason},
          {"train_loss", p.train_loss},
          {"val_loss", p.val_loss},
          {"experiment_hash", p.experiment_hash}};
}

TrainingProvenance provenance_from_json(const nlohmann::json& j) {
  TrainingProvenance p;
  j.at("seed").get_to(p.seed);
  j.at("config_hash").get_to(p.config_hash);
  j.at("best_epoch").get_to(p.best_epoch);
  j.at("epochs_run").get_to(p.epochs_run);
  j.at("best_val_loss").get_to(p.best_val_loss);
  j.at("stop_reason").get_to(p.stop_reason);
  j.at("train_loss").get_to(p.train_loss);
  j.at("val_loss").get_to(p.val_loss);
  if (j.contains("experiment_hash")) j.at("experiment_hash").get_to(p.experiment_hash);
  return p;
}

void save_model(const TrainedNet& model, const std::filesystem::path& path) {
  const bool f32 = model.precision == Precision::f32;
  nlohmann::json dir = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& t : model.state) {
    dir.push_back({{"name", t.name}, {"shape", t.value.shape()}, {"offset", offset}});
    offset += t.value.size();
  }
  const nlohmann::json header{{"netspec", to_json(model.spec)},
                              {"precision", std::string(to_string(model.precision))},
                              {"provenance", to_json(model.provenance)},
                              {"tensors", dir}};
  const auto text = header.dump();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("model file: cannot write " + path.string());
  os.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(os, kModelFormatVersion);
  put<std::uint32_t>(os, f32 ? 0U : 1U);
  put<std::uint64_t>(os, text.size());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& t : model.state) {
    for (double v : t.value.vec()) {
      if (f32) {
        put<float>(os, static_cast<float>(v));
      } else {
        put<double>(os, v);
      }
    }
  }
  if (!os) throw DataError("model file: write failed for " + path.string());
}

TrainedNet load_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("model file: cannot open " + path.string());
  char magic[8];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw DataError("model file: " + path.string() + " is not an emgkey model");
  }
  const auto version = get<std::uint32_t>(is, "version");
  if (version != kModelFormatVersion) {
    throw DataError("model file: unsupported format version " + std::to_string(version));
  }
  const auto dtype = get<std::uint32_t>(is, "value type");
  if (dtype > 1) throw DataError("model file: unknown value type " + std::to_string(dtype));
  const auto len = get<std::uint64_t>(is, "header length");
  if (len > (1ULL << 30)) throw DataError("model file: implausible header length");
  std::string text(len, '\0');
  if (!is.read(text.data(), static_cast<std::streamsize>(len))) throw DataError("model file: truncated header");
  TrainedNet model;
  try {
    const auto header = nlohmann::json::parse(text);
    model.spec = netspec_from_json(header.at("netspec"));
    model.precision = parse_precision(header.at("precision").get<std::string>());
    model.provenance = provenance_from_json(header.at("provenance"));
    for (const auto& entry : header.at("tensors")) {
      NamedTensor<double> t;
      t.name = entry.at("name").get<std::string>();
      t.value = Tensor<double>(entry.at("shape").get<Shape>());
      for (auto& v : t.value.vec()) {
        v = dtype == 0 ? static_cast<double>(get<float>(is, "tensor data")) : get<double>(is, "tensor data");
      }
      model.state.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model file: malformed header: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("model file: ") + e.what());
  }
  if ((dtype == 0) != (model.precision == Precision::f32)) {
    throw DataError("model file: value type disagrees with the recorded precision");
  }
  // Validates names and shapes against the network.
  Network<double> probe(model.spec, 0);
  try {
    probe.load_state(model.state);
  } catch (const ConfigError& e) {
    throw DataError(std::string("model file: ") + e.what());
  }
  return model;
}

}  // namespace emgkey::nn
