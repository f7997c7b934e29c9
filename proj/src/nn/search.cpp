#include "emgkey/nn/search.hpp"

#include "emgkey/core/error.hpp"
#include "emgkey/core/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace emgkey::nn {

void validate(const SearchSpace& space) {
  std::set<std::string> names;
  for (const auto& p : space.params) {
    if (!names.insert(p.name).second) throw ConfigError("search space: duplicate '" + p.name + "'");
    switch (p.kind) {
      case ParamRange::Kind::choice:
        if (p.choices.empty()) throw ConfigError("search space: '" + p.name + "' has no choices");
        break;
      case ParamRange::Kind::log_uniform:
        if (!(p.lo > 0.0)) throw ConfigError("search space: '" + p.name + "' needs positive bounds");
        [[fallthrough]];
      case ParamRange::Kind::uniform:
        if (!(p.hi >= p.lo)) throw ConfigError("search space: '" + p.name + "' has hi < lo");
        break;
    }
  }
}

std::vector<SampledConfig> sample_configs(const SearchSpace& space, std::size_t count,
                                          std::uint64_t seed) {
  validate(space);
  Rng rng = Rng::derive(seed, 0x5EA);
  std::vector<SampledConfig> out(count);
  for (auto& cfg : out) {
    for (const auto& p : space.params) {
      switch (p.kind) {
        case ParamRange::Kind::choice: cfg[p.name] = p.choices[rng.index(p.choices.size())]; break;
        case ParamRange::Kind::uniform: cfg[p.name] = rng.uniform(p.lo, p.hi); break;
        case ParamRange::Kind::log_uniform:
          cfg[p.name] = std::exp(rng.uniform(std::log(p.lo), std::log(p.hi)));
          break;
      }
    }
  }
  return out;
}

std::vector<std::vector<std::string>> participant_folds(std::vector<std::string> participants,
                                                        std::size_t folds, std::uint64_t seed) {
  std::sort(participants.begin(), participants.end());
  participants.erase(std::unique(participants.begin(), participants.end()), participants.end());
  if (folds < 2) throw ConfigError("hyper_search: at least 2 folds are needed");
  if (participants.size() < folds) {
    throw ConfigError("hyper_search: " + std::to_string(participants.size()) +
                      " participants cannot fill " + std::to_string(folds) + " disjoint folds");
  }
  Rng::derive(seed, 0xF01D).shuffle(participants.begin(), participants.end());
  std::vector<std::vector<std::string>> out(folds);
  for (std::size_t i = 0; i < participants.size(); ++i) out[i % folds].push_back(participants[i]);
  for (auto& f : out) std::sort(f.begin(), f.end());
  return out;
}

std::vector<SearchResult> hyper_search(const SearchSpace& space, std::size_t count,
                                       const SegmentBatch& data, const FoldScorer& scorer,
                                       std::uint64_t seed, std::size_t folds) {
  if (folds < 3) throw ConfigError("hyper_search: at least 3 folds are required");
  std::vector<std::string> owner(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) owner[i] = data.source_of(i).meta.participant;
  const auto groups = participant_folds(owner, folds, seed);
  std::vector<SegmentBatch> train_parts, val_parts;
  for (const auto& g : groups) {
    std::vector<std::size_t> in, out;
    for (std::size_t i = 0; i < data.size(); ++i) {
      (std::binary_search(g.begin(), g.end(), owner[i]) ? in : out).push_back(i);
    }
    val_parts.push_back(data.subset(in));
    train_parts.push_back(data.subset(out));
  }
  std::vector<SearchResult> results;
  for (auto& cfg : sample_configs(space, count, seed)) {
    SearchResult r;
    r.config = cfg;
    for (std::size_t f = 0; f < folds; ++f) r.fold_f1.push_back(scorer(cfg, train_parts[f], val_parts[f]));
    r.mean_f1 = std::accumulate(r.fold_f1.begin(), r.fold_f1.end(), 0.0) / static_cast<double>(folds);
    results.push_back(std::move(r));
  }
  // Undefined scores rank last.
  const auto key = [](double v) { return std::isnan(v) ? -INFINITY : v; };
  std::stable_sort(results.begin(), results.end(), [&](const auto& a, const auto& b) {
    return key(a.mean_f1) > key(b.mean_f1);
  });
  return results;
}

}  // namespace emgkey::nn
