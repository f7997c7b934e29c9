#include "emgkey/cli/commands.hpp"

#include "emgkey/analysis/similarity.hpp"
#include "emgkey/analysis/typing.hpp"
#include "emgkey/core/csv.hpp"
#include "emgkey/core/error.hpp"
#include "emgkey/core/parallel.hpp"
#include "emgkey/core/random.hpp"
#include "emgkey/ingest/adapter.hpp"
#include "emgkey/ingest/canonical.hpp"
#include "emgkey/nn/serialize.hpp"
#include "emgkey/post/report.hpp"
#include "emgkey/preprocess/segment.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>

namespace emgkey::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::string> fused_header() {
  std::vector<std::string> h{"t"};
  for (auto name : kChannelNames) h.emplace_back(name);
  return h;
}

void log(const RunContext& ctx, const std::string& line) {
  if (ctx.log) *ctx.log << line << '\n';
}

void write_json(const fs::path& path, const json& j) {
  fs::create_directories(path.parent_path());
  csv::write_text(path, j.dump(2) + "\n");
}

json read_json(const fs::path& path) {
  try {
    return json::parse(csv::read_text(path));
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string two_digits(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02zu", i);
  return buf;
}

fs::path fused_root(const ExperimentConfig& cfg) { return cfg.output / "fused"; }
fs::path model_path(const ExperimentConfig& cfg) { return cfg.output / "models" / (model_tag(cfg) + ".emgk"); }
fs::path eval_dir(const ExperimentConfig& cfg) { return cfg.output / "eval" / model_tag(cfg); }

json provenance(const RunContext& ctx) { return {{"config_hash", ctx.hash}, {"seed", ctx.cfg.seed}}; }

json describe(const StoredRecording& r) {
  const auto& m = r.stream->meta;
  return {{"id", r.id},
          {"participant", m.participant},
          {"session", m.session_id},
          {"task_type", std::string(to_string(m.task_type))},
          {"typing_style", std::string(to_string(m.typing_style))}};
}

/// Press times a sliding track can detect: those within half a grid step of it.
std::vector<double> truth_in_track(const KeyEventStream& keys, const post::ProbabilityTrack& track) {
  std::vector<double> out;
  if (track.values.empty()) return out;
  const double half = 0.5 / track.rate;
  const double lo = track.time(0) - half;
  const double hi = track.time(track.values.size() - 1) + half;
  for (double t : keys.press_times()) {
    if (t >= lo && t < hi) out.push_back(t);
  }
  return out;
}

std::string file_id(const std::string& id) {
  std::string s = id;
  std::replace(s.begin(), s.end(), '/', '_');
  return s;
}

json summarize(const std::vector<json>& entries, const std::vector<std::pair<std::string, json::json_pointer>>& fields) {
  json out = json::object();
  for (const auto& [name, ptr] : fields) {
    std::vector<std::optional<double>> v;
    for (const auto& e : entries) v.push_back(e.contains(ptr) ? post::optional_number(e.at(ptr)) : std::nullopt);
    const auto m = post::mean_sd(v);
    auto j = post::to_json(m);
    j["text"] = post::format_mean_sd(m);
    out[name] = j;
  }
  return out;
}

std::vector<std::pair<std::string, json::json_pointer>> binary_fields() {
  std::vector<std::pair<std::string, json::json_pointer>> f;
  for (const char* k : {"balanced_accuracy", "accuracy", "precision", "recall", "specificity", "f1"}) {
    f.emplace_back(k, json::json_pointer(std::string("/metrics/") + k));
  }
  return f;
}

std::vector<std::pair<std::string, json::json_pointer>> topn_fields(const std::vector<int>& ns) {
  std::vector<std::pair<std::string, json::json_pointer>> f;
  for (int n : ns) {
    const auto key = "top" + std::to_string(n);
    f.emplace_back(key, json::json_pointer("/topn/" + key));
  }
  return f;
}

std::vector<StoredRecording> select(const std::vector<StoredRecording>& recs, const std::vector<std::string>& people,
                                    bool inside) {
  std::vector<StoredRecording> out;
  for (const auto& r : recs) {
    const bool in = std::find(people.begin(), people.end(), r.stream->meta.participant) != people.end();
    if (in == inside) out.push_back(r);
  }
  return out;
}

}  // namespace

RunContext::RunContext(ExperimentConfig c, std::size_t j, std::ostream* l)
    : cfg(std::move(c)), hash(config_hash(cfg)), jobs(std::max<std::size_t>(j, 1)), log(l) {}

void save_fused(const fs::path& dir, const FusedStream& stream, const KeyEventStream& keys, const json& info) {
  fs::create_directories(dir);
  std::string out = csv::join(fused_header()) + "\n";
  for (std::size_t i = 0; i < stream.length; ++i) {
    out += csv::format_double(stream.time(i));
    for (std::size_t c = 0; c < kFusedChannels; ++c) {
      out += ',';
      out += csv::format_double(stream.values[c * stream.length + i]);
    }
    out += '\n';
  }
  csv::write_text(dir / "fused.csv", out);
  ingest::write_keys(keys, dir / "keys.csv");
  csv::write_text(dir / "meta.json", ingest::to_json(stream.meta).dump(2) + "\n");
  auto full = info;
  full["t0"] = stream.t0;
  full["rate"] = stream.rate;
  full["length"] = stream.length;
  write_json(dir / "info.json", full);
}

StoredRecording load_fused(const fs::path& dir, const std::string& id) {
  const auto info = read_json(dir / "info.json");
  auto stream = std::make_shared<FusedStream>();
  stream->meta = ingest::read_meta(dir / "meta.json");
  const auto table = csv::read_numeric(dir / "fused.csv", fused_header());
  stream->length = table.t.size();
  stream->t0 = info.at("t0").get<double>();
  stream->rate = info.at("rate").get<double>();
  if (stream->length != info.at("length").get<std::size_t>()) {
    throw DataError((dir / "fused.csv").string() + ": row count disagrees with info.json");
  }
  stream->values.reserve(kFusedChannels * stream->length);
  for (const auto& col : table.cols) stream->values.insert(stream->values.end(), col.begin(), col.end());
  return {id, std::move(stream), ingest::read_keys(dir / "keys.csv")};
}

std::vector<StoredRecording> load_all_fused(const RunContext& ctx) {
  const auto root = fused_root(ctx.cfg);
  if (!fs::exists(root)) throw DataError(root.string() + ": no preprocessed data, run preprocess first");
  std::vector<std::string> ids;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file() && e.path().filename() == "info.json") {
      ids.push_back(fs::relative(e.path().parent_path(), root).generic_string());
    }
  }
  std::sort(ids.begin(), ids.end());
  if (ids.empty()) throw DataError(root.string() + ": no preprocessed recordings");
  std::vector<StoredRecording> out(ids.size());
  parallel_for(ids.size(), ctx.jobs, [&](std::size_t i) { out[i] = load_fused(root / ids[i], ids[i]); });
  return out;
}

std::vector<std::string> test_participants(const ExperimentConfig& cfg, const std::vector<StoredRecording>& recs) {
  if (!cfg.test_participants.empty()) return cfg.test_participants;
  std::set<std::string> people;
  for (const auto& r : recs) people.insert(r.stream->meta.participant);
  if (people.size() < 2) return {};
  return {*people.rbegin()};
}

void run_synth(const RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto& plan = cfg.synth;
  const auto root = cfg.output / "data";
  struct Job {
    ingest::SynthConfig synth;
    fs::path dir;
  };
  std::vector<Job> jobs;
  for (std::size_t p = 0; p < plan.participants; ++p) {
    const auto participant = "p" + two_digits(p + 1);
    const auto bank = Rng::derive(cfg.seed, 0xBA4C0000ULL + p).next();
    for (std::size_t s = 0; s < plan.sessions; ++s) {
      for (std::size_t r = 0; r < plan.recordings; ++r) {
        Job job;
        job.synth = plan.base;
        job.synth.seed = Rng::derive(cfg.seed, jobs.size()).next();
        job.synth.template_bank_seed = bank;
        if (!plan.text.empty()) job.synth.key_sequence = *word_to_keys(plan.text, plan.base.meta.layout);
        auto& meta = job.synth.meta;
        meta.participant = participant;
        meta.session_id = participant + "_s" + std::to_string(s + 1);
        meta.recording_id = meta.session_id + "_r" + std::to_string(r + 1);
        meta.task_type = plan.tasks[r % plan.tasks.size()];
        meta.typing_style = plan.styles[p % plan.styles.size()];
        job.dir = root / participant / ("s" + std::to_string(s + 1)) / ("r" + std::to_string(r + 1));
        jobs.push_back(std::move(job));
      }
    }
  }
  parallel_for(jobs.size(), ctx.jobs, [&](std::size_t i) {
    ingest::save_recording(ingest::synthesize(jobs[i].synth), jobs[i].dir);
  });
  auto manifest = provenance(ctx);
  manifest["recordings"] = json::array();
  for (const auto& j : jobs) {
    manifest["recordings"].push_back({{"path", fs::relative(j.dir, root).generic_string()},
                                      {"participant", j.synth.meta.participant},
                                      {"seed", j.synth.seed},
                                      {"template_bank_seed", j.synth.template_bank_seed}});
  }
  write_json(root / "manifest.json", manifest);
  log(ctx, "synth: wrote " + std::to_string(jobs.size()) + " recordings to " + root.string());
}

void run_preprocess(const RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  auto registry = ingest::AdapterRegistry::with_builtin();
  struct Item {
    std::string id;
    fs::path source;
    std::optional<SensorRecording> loaded;
  };
  std::vector<Item> items;
  for (const auto& root : cfg.dataset_roots()) {
    if (cfg.adapter == "canonical") {
      for (const auto& dir : ingest::find_recordings(root)) {
        auto id = fs::relative(dir, root).generic_string();
        if (id == ".") id = dir.filename().generic_string();
        items.push_back({id, dir, std::nullopt});
      }
    } else {
      for (auto& rec : registry.load(cfg.adapter, root)) {
        const auto id = rec.meta.participant + "/" + rec.meta.session_id + "/" + rec.meta.recording_id;
        items.push_back({id, root, std::move(rec)});
      }
    }
  }
  if (items.empty()) throw DataError("preprocess: no recordings found under the dataset roots");
  std::set<std::string> seen;
  for (const auto& it : items) {
    if (!seen.insert(it.id).second) throw DataError("preprocess: duplicate recording id '" + it.id + "'");
  }
  const auto out_root = fused_root(cfg);
  std::vector<json> infos(items.size());
  parallel_for(items.size(), ctx.jobs, [&](std::size_t i) {
    auto& it = items[i];
    const auto rec = it.loaded ? *it.loaded : registry.load("canonical", it.source).at(0);
    const auto fused = preprocess::fuse(rec, cfg.fuse);
    auto info = provenance(ctx);
    info["id"] = it.id;
    if (fused.alignment) {
      info["alignment"] = {{"lag", fused.alignment->lag}, {"confidence", fused.alignment->confidence}};
    } else {
      info["alignment"] = nullptr;
    }
    save_fused(out_root / it.id, fused.stream, rec.keys, info);
    infos[i] = info;
  });
  auto summary = provenance(ctx);
  summary["recordings"] = infos;
  write_json(out_root / "summary.json", summary);
  log(ctx, "preprocess: fused " + std::to_string(items.size()) + " recordings into " + out_root.string());
}

void run_train(const RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto recs = load_all_fused(ctx);
  const auto held_out = test_participants(cfg, recs);
  const auto train_recs = select(recs, held_out, false);
  if (train_recs.empty()) throw DataError("train: every participant is held out");
  const auto mode = cfg.model.head == nn::Head::binary ? preprocess::SegmentMode::binary
                                                       : preprocess::SegmentMode::multiclass;
  std::vector<SegmentBatch> parts;
  for (const auto& r : train_recs) parts.push_back(preprocess::segment(r.stream, r.keys, cfg.segmentation, mode).batch);
  auto data = SegmentBatch::concat(parts);
  if (data.empty()) throw DataError("train: no training segments");
  data.set_mask(channel_mask(cfg.sensors));

  auto tcfg = cfg.train;
  tcfg.on_epoch = [&](const nn::EpochLog& e) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "train: epoch %zu train_loss %.6f val_loss %.6f%s", e.epoch, e.train_loss,
                  e.val_loss, e.improved ? " *" : "");
    log(ctx, buf);
  };
  auto model = nn::train(build_network(cfg.model), data, tcfg);
  model.provenance.experiment_hash = ctx.hash;
  const auto path = model_path(cfg);
  fs::create_directories(path.parent_path());
  nn::save_model(model, path);

  auto side = provenance(ctx);
  side["model"] = model_tag(cfg);
  side["segments"] = data.size();
  side["held_out"] = held_out;
  json ids = json::array();
  for (const auto& r : train_recs) ids.push_back(r.id);
  side["train_recordings"] = ids;
  side["training"] = nn::to_json(model.provenance);
  write_json(path.parent_path() / (model_tag(cfg) + ".json"), side);
  log(ctx, "train: saved " + path.string() + " after " + std::to_string(model.provenance.epochs_run) + " epochs");
}

void run_eval(const RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto path = model_path(cfg);
  if (!fs::exists(path)) throw DataError(path.string() + ": no trained model, run train first");
  const auto model = nn::load_model(path);
  const nn::Classifier clf(model);
  const auto recs = load_all_fused(ctx);
  const auto held_out = test_participants(cfg, recs);
  const auto test_recs = held_out.empty() ? recs : select(recs, held_out, true);
  const auto dir = eval_dir(cfg);
  const auto mask = channel_mask(cfg.sensors);
  const bool binary = cfg.model.head == nn::Head::binary;

  fs::create_directories(dir / "predictions");
  std::vector<json> entries(test_recs.size());
  parallel_for(test_recs.size(), ctx.jobs, [&](std::size_t i) {
    const auto& r = test_recs[i];
    auto entry = describe(r);
    entry["sensors"] = sensor_label(cfg.sensors);
    const auto mode = binary ? preprocess::SegmentMode::sliding : preprocess::SegmentMode::multiclass;
    auto batch = preprocess::segment(r.stream, r.keys, cfg.segmentation, mode).batch;
    if (batch.empty()) throw DataError("eval: recording " + r.id + " yields no windows");
    batch.set_mask(mask);
    const auto probs = clf.probabilities(batch, 1);
    if (binary) {
      post::ProbabilityTrack track;
      track.t0 = batch.refs().front().center_time;
      track.rate = cfg.segmentation.rate / static_cast<double>(cfg.segmentation.stride);
      track.values.assign(probs.data(), probs.data() + batch.size());
      post::write_binary_predictions(dir / "predictions" / (file_id(r.id) + ".csv"), track);
      const auto truth = truth_in_track(r.keys, track);
      const double tol[] = {cfg.eval.tolerance};
      const auto pt = post::tolerance_sweep(track, truth, tol, cfg.eval.peaks).front();
      entry["presses"] = truth.size();
      entry["tolerance"] = pt.tolerance;
      entry["confusion"] = post::to_json(pt.confusion);
      entry["metrics"] = post::to_json(pt.metrics);
      entry["lag"] = post::to_json(pt.lags);
    } else {
      post::ClassPredictions cp;
      for (const auto& ref : batch.refs()) cp.t.push_back(ref.center_time);
      cp.p.assign(probs.data(), probs.data() + probs.size());
      post::write_class_predictions(dir / "predictions" / (file_id(r.id) + ".csv"), cp);
      const auto& labels = *batch.key_labels();
      entry["keystrokes"] = labels.size();
      json topn = json::object();
      for (int n : cfg.eval.topn) topn["top" + std::to_string(n)] = post::topn_accuracy(cp.p, labels, n);
      entry["topn"] = topn;
    }
    entries[i] = std::move(entry);
  });

  auto out = provenance(ctx);
  out["model"] = model_tag(cfg);
  out["architecture"] = std::string(arch::to_string(cfg.model.architecture));
  out["head"] = std::string(nn::to_string(cfg.model.head));
  out["sensors"] = sensor_label(cfg.sensors);
  out["held_out"] = held_out;
  out["model_config_hash"] = model.provenance.config_hash;
  out["recordings"] = entries;
  out["aggregate"] = summarize(entries, binary ? binary_fields() : topn_fields(cfg.eval.topn));
  write_json(dir / "metrics.json", out);
  log(ctx, "eval: scored " + std::to_string(entries.size()) + " recordings, wrote " + (dir / "metrics.json").string());
}

void run_sweep(const RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  if (cfg.model.head != nn::Head::binary) throw ConfigError("sweep: tolerance sweeps apply to the binary head");
  const auto dir = eval_dir(cfg);
  const auto metrics = read_json(dir / "metrics.json");
  const auto root = fused_root(cfg);
  std::vector<json> per_recording;
  std::vector<std::vector<json>> by_tolerance(cfg.eval.tolerances.size());
  for (const auto& entry : metrics.at("recordings")) {
    const auto id = entry.at("id").get<std::string>();
    const auto track = post::read_binary_predictions(dir / "predictions" / (file_id(id) + ".csv"),
                                                     cfg.segmentation.rate / static_cast<double>(cfg.segmentation.stride));
    const auto keys = ingest::read_keys(root / id / "keys.csv");
    const auto sweep = post::tolerance_sweep(track, truth_in_track(keys, track), cfg.eval.tolerances,
                                             cfg.eval.peaks, ctx.jobs);
    json curve = json::array();
    for (std::size_t i = 0; i < sweep.size(); ++i) {
      auto p = post::to_json(sweep[i]);
      curve.push_back(p);
      by_tolerance[i].push_back(p);
    }
    per_recording.push_back({{"id", id}, {"curve", curve}});
  }

  const auto fields = binary_fields();
  json aggregate = json::array();
  std::string table = "tolerance";
  for (const auto& [name, ptr] : fields) table += "," + name + "_mean," + name + "_sd";
  table += "\n";
  for (std::size_t i = 0; i < cfg.eval.tolerances.size(); ++i) {
    const auto s = summarize(by_tolerance[i], fields);
    aggregate.push_back({{"tolerance", cfg.eval.tolerances[i]}, {"metrics", s}});
    table += csv::format_double(cfg.eval.tolerances[i]);
    for (const auto& [name, ptr] : fields) {
      const auto& m = s.at(name);
      table += "," + (m.at("mean").is_null() ? std::string() : csv::format_double(m.at("mean").get<double>()));
      table += "," + (m.at("sd").is_null() ? std::string() : csv::format_double(m.at("sd").get<double>()));
    }
    table += "\n";
  }
  auto out = provenance(ctx);
  out["model"] = model_tag(cfg);
  out["tolerances"] = cfg.eval.tolerances;
  out["aggregate"] = aggregate;
  out["recordings"] = per_recording;
  write_json(dir / "sweep.json", out);
  csv::write_text(dir / "sweep.csv", table);
  log(ctx, "sweep: " + std::to_string(cfg.eval.tolerances.size()) + " tolerances over " +
               std::to_string(per_recording.size()) + " recordings");
}

void run_analyze(const RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto recs = load_all_fused(ctx);
  const auto dir = cfg.output / "analysis";
  fs::create_directories(dir);

  std::vector<double> press_press, holds;
  std::vector<std::optional<double>> speeds, skews;
  json per = json::array();
  for (const auto& r : recs) {
    const auto stats = analysis::interval_stats(r.keys);
    press_press.insert(press_press.end(), stats.press_press.begin(), stats.press_press.end());
    holds.insert(holds.end(), stats.holds.begin(), stats.holds.end());
    const auto labels = preprocess::binary_label_stream(*r.stream, r.keys);
    const double skew = analysis::class_skew(labels);
    speeds.push_back(stats.keys_per_minute);
    skews.push_back(skew);
    auto j = describe(r);
    j["presses"] = r.keys.press_times().size();
    j["keys_per_minute"] = post::to_json(stats.keys_per_minute);
    j["class_skew"] = skew;
    per.push_back(j);
  }
  auto write_cdf = [&](const fs::path& p, std::vector<double> values) {
    std::string out = "value,fraction\n";
    for (const auto& [v, f] : analysis::empirical_cdf(std::move(values))) {
      out += csv::format_double(v) + "," + csv::format_double(f) + "\n";
    }
    csv::write_text(p, out);
  };
  write_cdf(dir / "press_press_cdf.csv", press_press);
  write_cdf(dir / "hold_cdf.csv", holds);

  std::vector<analysis::FusedRecording> fused;
  for (const auto& r : recs) fused.push_back({*r.stream, r.keys});
  const auto table = analysis::within_between_report(fused, {cfg.word}, {}, ctx.jobs);
  std::string dist = "a,b,relation,distance\n";
  for (std::size_t i = 0; i < table.items.size(); ++i) {
    for (std::size_t j = i + 1; j < table.items.size(); ++j) {
      const auto& a = table.items[i];
      const auto& b = table.items[j];
      dist += recs[a.source].id + "#" + std::to_string(a.first_press) + "," + recs[b.source].id + "#" +
              std::to_string(b.first_press) + "," + std::string(analysis::to_string(analysis::relation(a, b))) +
              "," + csv::format_double(table.at(i, j)) + "\n";
    }
  }
  csv::write_text(dir / "dtw_distances.csv", dist);

  auto out = provenance(ctx);
  out["recordings"] = per;
  const auto speed = post::mean_sd(speeds);
  const auto skew = post::mean_sd(skews);
  out["keys_per_minute"] = post::to_json(speed);
  out["class_skew"] = post::to_json(skew);
  out["word"] = cfg.word;
  out["word_occurrences"] = table.items.size();
  json rel = json::array();
  for (const auto& s : table.summary) {
    rel.push_back({{"relation", std::string(analysis::to_string(s.relation))},
                   {"pairs", s.pairs},
                   {"mean_distance", s.pairs ? json(s.mean) : json(nullptr)}});
  }
  out["dtw"] = rel;
  write_json(dir / "analysis.json", out);
  log(ctx, "analyze: " + std::to_string(recs.size()) + " recordings, " + std::to_string(table.items.size()) +
               " occurrences of '" + cfg.word + "'");
}

void run_report(const RunContext& ctx) {
  const auto root = ctx.cfg.output / "eval";
  std::vector<fs::path> files;
  if (fs::exists(root)) {
    for (const auto& e : fs::directory_iterator(root)) {
      if (fs::exists(e.path() / "metrics.json")) files.push_back(e.path() / "metrics.json");
    }
  }
  if (files.empty()) throw DataError(root.string() + ": no evaluations to report, run eval first");
  std::sort(files.begin(), files.end());

  const std::vector<std::pair<std::string, std::string>> groupings{
      {"task_type", "password type"}, {"typing_style", "typing style"}, {"participant", "participant"},
      {"sensors", "sensor subset"}};
  auto out = provenance(ctx);
  json tables = json::array();
  std::string md = "# Evaluation report\n\nconfig hash " + ctx.hash + ", seed " + std::to_string(ctx.cfg.seed) + "\n";
  for (const auto& f : files) {
    const auto metrics = read_json(f);
    const auto model = metrics.at("model").get<std::string>();
    const bool binary = metrics.at("head").get<std::string>() == "binary";
    std::vector<std::pair<std::string, json::json_pointer>> fields;
    if (binary) {
      for (const char* k : {"balanced_accuracy", "precision", "recall", "f1"}) {
        fields.emplace_back(k, json::json_pointer(std::string("/metrics/") + k));
      }
    } else {
      for (const auto& [k, v] : metrics.at("recordings").at(0).at("topn").items()) {
        fields.emplace_back(k, json::json_pointer("/topn/" + k));
      }
    }
    for (const auto& [key, title] : groupings) {
      std::map<std::string, std::vector<json>> groups;
      for (const auto& e : metrics.at("recordings")) groups[e.at(key).get<std::string>()].push_back(e);
      md += "\n## " + model + " by " + title + "\n\n| " + title + " | n |";
      for (const auto& [name, ptr] : fields) md += " " + name + " |";
      md += "\n|---|---|";
      for (std::size_t i = 0; i < fields.size(); ++i) md += "---|";
      md += "\n";
      json rows = json::array();
      for (const auto& [value, entries] : groups) {
        const auto s = summarize(entries, fields);
        rows.push_back({{"group", value}, {"n", entries.size()}, {"metrics", s}});
        md += "| " + value + " | " + std::to_string(entries.size()) + " |";
        for (const auto& [name, ptr] : fields) md += " " + s.at(name).at("text").get<std::string>() + " |";
        md += "\n";
      }
      tables.push_back({{"model", model}, {"group_by", key}, {"rows", rows}});
    }
  }
  out["tables"] = tables;
  const auto dir = ctx.cfg.output / "report";
  write_json(dir / "report.json", out);
  csv::write_text(dir / "report.md", md);
  log(ctx, "report: " + std::to_string(tables.size()) + " tables in " + dir.string());
}

int exit_code(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 1;
  if (dynamic_cast<const NumericError*>(&e)) return 3;
  return 2;
}

std::string error_code(const std::exception& e) {
  switch (exit_code(e)) {
    case 1: return "config_error";
    case 3: return "numeric_error";
    default: return "data_error";
  }
}

}  // namespace emgkey::cli
