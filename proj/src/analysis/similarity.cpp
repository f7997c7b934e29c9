#include "emgkey/analysis/similarity.hpp"

#include "emgkey/core/keys.hpp"
#include "emgkey/core/parallel.hpp"

#include <cctype>

namespace emgkey::analysis {

namespace {

bool opens_word(PhysKey k) { return k.name() == "SPCE" || k.name() == "RTRN"; }

bool closes_word(PhysKey k, Layout layout) {
  if (opens_word(k)) return true;
  const auto label = key_label(k, layout);
  return label.size() == 1 && std::ispunct(static_cast<unsigned char>(label[0]));
}

}  // namespace

std::vector<WordOccurrence> find_word(const FusedRecording& rec, std::size_t source,
                                      const WordSelector& sel) {
  std::vector<WordOccurrence> out;
  const auto& meta = rec.stream.meta;
  const auto seq = word_to_keys(sel.word, meta.layout);
  if (!seq || seq->empty()) return out;
  const auto presses = rec.keys.presses();
  const auto w = seq->size();
  for (std::size_t i = 0; i + w <= presses.size(); ++i) {
    bool match = true;
    for (std::size_t k = 0; match && k < w; ++k) match = presses[i + k].key == (*seq)[k];
    if (!match) continue;
    if (i > 0 && !opens_word(presses[i - 1].key)) continue;
    if (i + w < presses.size() && !closes_word(presses[i + w].key, meta.layout)) continue;
    WordOccurrence occ;
    occ.source = source;
    occ.first_press = i;
    occ.start = presses[i].time - sel.before;
    occ.end = presses[i + w - 1].time + sel.after;
    occ.session = meta.session_id;
    occ.participant = meta.participant;
    occ.recording = meta.recording_id;
    const auto i0 = rec.stream.nearest_index(occ.start);
    const auto i1 = rec.stream.nearest_index(occ.end);
    if (i0 < 0 || i1 >= static_cast<std::int64_t>(rec.stream.length)) continue;
    out.push_back(occ);
  }
  return out;
}

MultiSeries extract(const FusedRecording& rec, const WordOccurrence& occ) {
  const auto& s = rec.stream;
  const auto i0 = static_cast<std::size_t>(s.nearest_index(occ.start));
  const auto i1 = static_cast<std::size_t>(s.nearest_index(occ.end));
  const auto n = i1 - i0 + 1;
  const auto channels = s.length == 0 ? 0 : s.values.size() / s.length;
  MultiSeries out{channels, std::vector<double>(channels * n)};
  for (std::size_t c = 0; c < channels; ++c) {
    const auto ch = s.channel(c);
    std::copy(ch.begin() + static_cast<std::ptrdiff_t>(i0), ch.begin() + static_cast<std::ptrdiff_t>(i1 + 1),
              out.values.begin() + static_cast<std::ptrdiff_t>(c * n));
  }
  return out;
}

std::string_view to_string(Relation r) {
  switch (r) {
    case Relation::same_session: return "same_session";
    case Relation::same_participant: return "same_participant";
    case Relation::different_participant: return "different_participant";
  }
  return "?";
}

Relation relation(const WordOccurrence& a, const WordOccurrence& b) {
  if (a.participant != b.participant) return Relation::different_participant;
  return a.session == b.session ? Relation::same_session : Relation::same_participant;
}

DistanceTable within_between_report(const std::vector<FusedRecording>& recordings, const WordSelector& sel,
                                    const DtwConfig& cfg, std::size_t jobs) {
  DistanceTable table;
  std::vector<MultiSeries> series;
  for (std::size_t r = 0; r < recordings.size(); ++r) {
    for (auto& occ : find_word(recordings[r], r, sel)) {
      series.push_back(extract(recordings[r], occ));
      table.items.push_back(std::move(occ));
    }
  }
  const auto n = table.items.size();
  table.distances.assign(n * n, 0.0);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  }
  parallel_for(pairs.size(), jobs, [&](std::size_t p) {
    const auto [i, j] = pairs[p];
    const double d = dtw_distance(series[i], series[j], cfg);
    table.distances[i * n + j] = d;
    table.distances[j * n + i] = d;
  });

  for (auto rel : {Relation::same_session, Relation::same_participant, Relation::different_participant}) {
    RelationSummary s{rel, 0, 0.0};
    for (const auto& [i, j] : pairs) {
      if (relation(table.items[i], table.items[j]) != rel) continue;
      ++s.pairs;
      s.mean += table.at(i, j);
    }
    if (s.pairs > 0) s.mean /= static_cast<double>(s.pairs);
    table.summary.push_back(s);
  }
  return table;
}

}  // namespace emgkey::analysis
