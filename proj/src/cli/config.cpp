#include "emgkey/cli/config.hpp"

#include "emgkey/core/error.hpp"
#include "emgkey/core/hash.hpp"
#include "emgkey/core/keys.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cctype>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace emgkey::cli {
namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> list_of(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

class Parser {
 public:
  Parser(ExperimentConfig& cfg, fs::path base) : cfg_(cfg), base_(std::move(base)) { register_keys(); }

  void set(const std::string& key, const std::string& raw) {
    const auto it = setters_.find(key);
    if (it == setters_.end()) throw ConfigError("unknown configuration key '" + key + "'");
    current_ = key;
    try {
      it->second(trim(raw));
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(key + ": " + e.what());
    }
  }

 private:
  [[noreturn]] void bad(const std::string& v, const char* what) const {
    throw ConfigError(current_ + ": expected " + what + ", got '" + v + "'");
  }

  double real(const std::string& v) const {
    double x = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size() || v.empty()) bad(v, "a number");
    return x;
  }

  std::uint64_t count(const std::string& v) const {
    std::uint64_t x = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size() || v.empty()) bad(v, "a non-negative integer");
    return x;
  }

  bool flag(const std::string& v) const {
    if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
    if (v == "false" || v == "no" || v == "off" || v == "0") return false;
    bad(v, "true or false");
  }

  fs::path path(const std::string& v) const {
    const fs::path p(v);
    return (p.is_absolute() ? p : base_ / p).lexically_normal();
  }

  template <class Fn>
  void on(const std::string& key, Fn fn) {
    setters_[key] = std::function<void(const std::string&)>(fn);
  }

  void register_keys() {
    auto& c = cfg_;
    on("experiment.seed", [&](const std::string& v) { c.seed = count(v); });
    on("experiment.output", [&](const std::string& v) { c.output = path(v); });
    on("experiment.roots", [&](const std::string& v) {
      c.roots.clear();
      for (const auto& r : list_of(v)) c.roots.push_back(path(r));
    });
    on("experiment.adapter", [&](const std::string& v) { c.adapter = v; });
    on("experiment.test_participants", [&](const std::string& v) { c.test_participants = list_of(v); });

    auto& s = c.synth;
    on("synth.participants", [&](const std::string& v) { s.participants = count(v); });
    on("synth.sessions", [&](const std::string& v) { s.sessions = count(v); });
    on("synth.recordings", [&](const std::string& v) { s.recordings = count(v); });
    on("synth.keystrokes", [&](const std::string& v) { s.base.n_keystrokes = count(v); });
    on("synth.snr_db", [&](const std::string& v) { s.base.snr_db = real(v); });
    on("synth.individuality", [&](const std::string& v) { s.base.individuality = real(v); });
    on("synth.press_press_median", [&](const std::string& v) { s.base.press_press.median = real(v); });
    on("synth.press_press_sigma", [&](const std::string& v) { s.base.press_press.sigma = real(v); });
    on("synth.hold_median", [&](const std::string& v) { s.base.hold.median = real(v); });
    on("synth.hold_sigma", [&](const std::string& v) { s.base.hold.sigma = real(v); });
    on("synth.duration_pad", [&](const std::string& v) { s.base.duration_pad = real(v); });
    on("synth.clap", [&](const std::string& v) { s.base.clap = flag(v); });
    on("synth.arm_lag", [&](const std::string& v) { s.base.arm_lag = real(v); });
    on("synth.population_seed", [&](const std::string& v) { s.base.population_seed = count(v); });
    on("synth.layout", [&](const std::string& v) { s.base.meta.layout = parse_layout(v); });
    on("synth.text", [&](const std::string& v) { s.text = v; });
    on("synth.tasks", [&](const std::string& v) {
      s.tasks.clear();
      for (const auto& t : list_of(v)) s.tasks.push_back(parse_task_type(t));
    });
    on("synth.styles", [&](const std::string& v) {
      s.styles.clear();
      for (const auto& t : list_of(v)) s.styles.push_back(parse_typing_style(t));
    });

    on("preprocess.align", [&](const std::string& v) { c.fuse.align = flag(v); });
    on("preprocess.highpass_hz", [&](const std::string& v) {
      if (v == "off") {
        c.fuse.filter.highpass.reset();
      } else {
        c.fuse.filter.highpass = preprocess::HighpassSpec{real(v)};
      }
    });
    on("preprocess.notch_hz", [&](const std::string& v) {
      if (v == "off") {
        c.fuse.filter.notch.reset();
      } else {
        const double q = c.fuse.filter.notch ? c.fuse.filter.notch->q : preprocess::NotchSpec{}.q;
        c.fuse.filter.notch = preprocess::NotchSpec{real(v), q};
      }
    });
    on("preprocess.notch_q", [&](const std::string& v) {
      if (!c.fuse.filter.notch) c.fuse.filter.notch = preprocess::NotchSpec{};
      c.fuse.filter.notch->q = real(v);
    });
    on("preprocess.before", [&](const std::string& v) { c.segmentation.before = real(v); });
    on("preprocess.after", [&](const std::string& v) { c.segmentation.after = real(v); });
    on("preprocess.stride", [&](const std::string& v) { c.segmentation.stride = count(v); });

    on("sensors.subset", [&](const std::string& v) {
      c.sensors.clear();
      for (const auto& m : list_of(v)) {
        if (m == "emg") {
          c.sensors.push_back(Modality::emg);
        } else if (m == "acc") {
          c.sensors.push_back(Modality::acc);
        } else if (m == "gyro") {
          c.sensors.push_back(Modality::gyro);
        } else {
          bad(m, "emg, acc or gyro");
        }
      }
    });

    auto& m = c.model;
    on("model.architecture", [&](const std::string& v) { m.architecture = arch::parse_architecture(v); });
    on("model.head", [&](const std::string& v) { m.head = nn::parse_head(v); });
    on("model.filters_per_group", [&](const std::string& v) {
      m.crnn.filters_per_group = m.wavenet.filters_per_group = count(v);
    });
    on("model.resnet11_filters", [&](const std::string& v) {
      const auto parts = list_of(v);
      if (parts.size() != 3) bad(v, "three filter totals");
      for (std::size_t i = 0; i < 3; ++i) m.resnet11.filters[i] = count(parts[i]);
    });
    on("model.initial_filters", [&](const std::string& v) { m.resnet18.initial_filters = count(v); });
    on("model.cwt_scales", [&](const std::string& v) { m.resnet18.cwt.scale_count = count(v); });
    on("model.lstm_units", [&](const std::string& v) { m.crnn.units = count(v); });
    on("model.dropout", [&](const std::string& v) { m.crnn.dropout = real(v); });

    auto& t = c.train;
    on("train.optimizer", [&](const std::string& v) { t.optimizer.kind = nn::parse_optimizer_kind(v); });
    on("train.learning_rate", [&](const std::string& v) { t.optimizer.learning_rate = real(v); });
    on("train.weight_decay", [&](const std::string& v) { t.optimizer.weight_decay = real(v); });
    on("train.batch_size", [&](const std::string& v) { t.optimizer.batch_size = count(v); });
    on("train.max_epochs", [&](const std::string& v) { t.max_epochs = count(v); });
    on("train.patience", [&](const std::string& v) { t.patience = count(v); });
    on("train.val_fraction", [&](const std::string& v) { t.val_fraction = real(v); });
    on("train.class_weights", [&](const std::string& v) { t.use_class_weights = flag(v); });
    on("train.subsample_majority", [&](const std::string& v) { t.subsample_majority = flag(v); });
    on("train.precision", [&](const std::string& v) { t.precision = nn::parse_precision(v); });

    auto& e = c.eval;
    on("eval.tolerance", [&](const std::string& v) { e.tolerance = real(v); });
    on("eval.tolerances", [&](const std::string& v) {
      e.tolerances.clear();
      for (const auto& x : list_of(v)) e.tolerances.push_back(real(x));
    });
    on("eval.min_distance", [&](const std::string& v) { e.peaks.min_distance = real(v); });
    on("eval.min_height", [&](const std::string& v) { e.peaks.min_height = real(v); });
    on("eval.min_prominence", [&](const std::string& v) { e.peaks.min_prominence = real(v); });
    on("eval.topn", [&](const std::string& v) {
      e.topn.clear();
      for (const auto& x : list_of(v)) e.topn.push_back(static_cast<int>(count(x)));
    });

    on("analyze.word", [&](const std::string& v) { c.word = v; });
  }

  ExperimentConfig& cfg_;
  fs::path base_;
  std::map<std::string, std::function<void(const std::string&)>> setters_;
  std::string current_;
};

void check(const ExperimentConfig& c) {
  if (c.sensors.empty()) throw ConfigError("sensors.subset must name at least one modality");
  if (c.synth.participants == 0 || c.synth.sessions == 0 || c.synth.recordings == 0) {
    throw ConfigError("synth: participants, sessions and recordings must be at least 1");
  }
  if (c.synth.tasks.empty() || c.synth.styles.empty()) throw ConfigError("synth: tasks and styles need an entry");
  ingest::validate(c.synth.base);
  if (!c.synth.text.empty() && !word_to_keys(c.synth.text, c.synth.base.meta.layout)) {
    throw ConfigError("synth.text: contains characters without an unshifted key");
  }
  preprocess::validate(c.fuse.filter);
  (void)preprocess::geometry(c.segmentation);
  if (c.segmentation.stride == 0) throw ConfigError("preprocess.stride must be at least 1");
  nn::validate(c.train);
  post::validate(c.eval.peaks, c.segmentation.rate / static_cast<double>(c.segmentation.stride));
  if (!(c.eval.tolerance >= 0.0)) throw ConfigError("eval.tolerance must be >= 0");
  for (double t : c.eval.tolerances) {
    if (!(t >= 0.0)) throw ConfigError("eval.tolerances must be >= 0");
  }
  for (int n : c.eval.topn) {
    if (n < 1 || n > kKeyCount) throw ConfigError("eval.topn entries must lie in 1..52");
  }
  for (auto f : c.model.resnet11.filters) {
    if (f == 0 || f % c.model.resnet11.groups != 0) {
      throw ConfigError("model.resnet11_filters: each total must be a positive multiple of " +
                        std::to_string(c.model.resnet11.groups));
    }
  }
  (void)build_network(c.model);
}

}  // namespace

std::vector<fs::path> ExperimentConfig::dataset_roots() const {
  if (!roots.empty()) return roots;
  return {output / "data"};
}

Override parse_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + text + "' is not section.key=value");
  return {trim(text.substr(0, eq)), trim(text.substr(eq + 1))};
}

ExperimentConfig parse_config(const std::string& text, const fs::path& base_dir,
                              const std::vector<Override>& overrides) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  ExperimentConfig cfg;
  cfg.output = (base_dir / "out").lexically_normal();
  Parser parser(cfg, base_dir);
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("config: key '" + section + "' is outside any section");
    for (const auto& [key, value] : body) parser.set(section + "." + key, value.data());
  }
  for (const auto& [key, value] : overrides) parser.set(key, value);
  cfg.train.seed = cfg.seed;
  check(cfg);
  return cfg;
}

ExperimentConfig load_config(const fs::path& path, const std::vector<Override>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot read configuration");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), fs::absolute(path).parent_path(), overrides);
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json tasks = nlohmann::json::array(), styles = nlohmann::json::array();
  for (auto t : c.synth.tasks) tasks.push_back(std::string(to_string(t)));
  for (auto s : c.synth.styles) styles.push_back(std::string(to_string(s)));
  const auto& b = c.synth.base;
  nlohmann::json filter = nlohmann::json::object();
  if (c.fuse.filter.highpass) filter["highpass_hz"] = c.fuse.filter.highpass->cutoff_hz;
  if (c.fuse.filter.notch) {
    filter["notch_hz"] = c.fuse.filter.notch->center_hz;
    filter["notch_q"] = c.fuse.filter.notch->q;
  }
  return {
      {"seed", c.seed},
      {"adapter", c.adapter},
      {"test_participants", c.test_participants},
      {"synth",
       {{"participants", c.synth.participants},
        {"sessions", c.synth.sessions},
        {"recordings", c.synth.recordings},
        {"keystrokes", b.n_keystrokes},
        {"snr_db", b.snr_db},
        {"individuality", b.individuality},
        {"press_press", {b.press_press.median, b.press_press.sigma}},
        {"hold", {b.hold.median, b.hold.sigma}},
        {"duration_pad", b.duration_pad},
        {"clap", b.clap},
        {"arm_lag", b.arm_lag},
        {"population_seed", b.population_seed},
        {"layout", std::string(to_string(b.meta.layout))},
        {"text", c.synth.text},
        {"tasks", tasks},
        {"styles", styles}}},
      {"preprocess",
       {{"align", c.fuse.align},
        {"filter", filter},
        {"before", c.segmentation.before},
        {"after", c.segmentation.after},
        {"stride", c.segmentation.stride}}},
      {"sensors", sensor_label(c.sensors)},
      {"model", nn::to_json(build_network(c.model))},
      {"train", nn::to_json(c.train)},
      {"eval",
       {{"tolerance", c.eval.tolerance},
        {"tolerances", c.eval.tolerances},
        {"min_distance", c.eval.peaks.min_distance},
        {"min_height", c.eval.peaks.min_height},
        {"min_prominence", c.eval.peaks.min_prominence},
        {"topn", c.eval.topn}}},
      {"word", c.word},
  };
}

std::string config_hash(const ExperimentConfig& cfg) { return hex64(fnv1a64(to_json(cfg).dump())); }

std::string sensor_label(const std::vector<Modality>& sensors) {
  std::string out;
  for (auto m : {Modality::emg, Modality::acc, Modality::gyro}) {
    if (std::find(sensors.begin(), sensors.end(), m) == sensors.end()) continue;
    if (!out.empty()) out += '+';
    for (char ch : to_string(m)) out += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  }
  return out;
}

std::string model_tag(const ExperimentConfig& cfg) {
  return std::string(arch::to_string(cfg.model.architecture)) + "_" + std::string(nn::to_string(cfg.model.head)) +
         "_" + sensor_label(cfg.sensors);
}

nn::NetSpec build_network(const ModelSection& m) {
  switch (m.architecture) {
    case arch::Architecture::tsc_resnet11: return arch::build_tsc_resnet11(m.head, m.resnet11);
    case arch::Architecture::cwt_resnet18: return arch::build_cwt_resnet18(m.head, m.resnet18);
    case arch::Architecture::crnn: return arch::build_crnn(m.head, m.crnn);
    case arch::Architecture::tsc_wavenet: return arch::build_tsc_wavenet(m.head, m.wavenet);
  }
  throw ConfigError("unknown architecture");
}

}  // namespace emgkey::cli
