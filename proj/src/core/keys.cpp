#include "emgkey/core/keys.hpp"

#include "emgkey/core/error.hpp"

#include <algorithm>
#include <string>

namespace emgkey {
namespace {

struct KeyInfo {
  std::string_view name;
  std::string_view de;
  std::string_view us;
  bool in_de;
  bool in_us;
  ArmSide arm;
};

constexpr ArmSide L = ArmSide::left;
constexpr ArmSide R = ArmSide::right;

constexpr std::array<KeyInfo, kKeyCount> kKeys{{
    {"AE01", "1", "1", true, true, L},   {"AE02", "2", "2", true, true, L},
    {"AE03", "3", "3", true, true, L},   {"AE04", "4", "4", true, true, L},
    {"AE05", "5", "5", true, true, L},   {"AE06", "6", "6", true, true, R},
    {"AE07", "7", "7", true, true, R},   {"AE08", "8", "8", true, true, R},
    {"AE09", "9", "9", true, true, R},   {"AE10", "0", "0", true, true, R},
    {"AE11", "ß", "-", true, true, R},   {"AE12", "", "=", false, true, R},
    {"BKSP", "", "", true, true, R},
    {"AD01", "q", "q", true, true, L},   {"AD02", "w", "w", true, true, L},
    {"AD03", "e", "e", true, true, L},   {"AD04", "r", "r", true, true, L},
    {"AD05", "t", "t", true, true, L},   {"AD06", "z", "y", true, true, R},
    {"AD07", "u", "u", true, true, R},   {"AD08", "i", "i", true, true, R},
    {"AD09", "o", "o", true, true, R},   {"AD10", "p", "p", true, true, R},
    {"AD11", "ü", "[", true, true, R},   {"AD12", "+", "]", true, true, R},
    {"RTRN", "", "", true, true, R},
    {"AC01", "a", "a", true, true, L},   {"AC02", "s", "s", true, true, L},
    {"AC03", "d", "d", true, true, L},   {"AC04", "f", "f", true, true, L},
    {"AC05", "g", "g", true, true, L},   {"AC06", "h", "h", true, true, R},
    {"AC07", "j", "j", true, true, R},   {"AC08", "k", "k", true, true, R},
    {"AC09", "l", "l", true, true, R},   {"AC10", "ö", ";", true, true, R},
    {"AC11", "ä", "'", true, true, R},   {"AC12", "#", "", true, false, R},
    {"LFSH", "", "", true, true, L},     {"LSGT", "<", "", true, false, L},
    {"AB01", "y", "z", true, true, L},   {"AB02", "x", "x", true, true, L},
    {"AB03", "c", "c", true, true, L},   {"AB04", "v", "v", true, true, L},
    {"AB05", "b", "b", true, true, L},   {"AB06", "n", "n", true, true, R},
    {"AB07", "m", "m", true, true, R},   {"AB08", ",", ",", true, true, R},
    {"AB09", ".", ".", true, true, R},   {"AB10", "-", "/", true, true, R},
    {"RTSH", "", "", true, true, R},     {"SPCE", " ", " ", true, true, R},
}};

std::array<PhysKey, kKeyCount> make_all_keys() {
  std::array<PhysKey, kKeyCount> keys;
  for (int i = 0; i < kKeyCount; ++i) keys[i] = PhysKey::from_ordinal(i);
  return keys;
}

std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  return 4;
}

}  // namespace

PhysKey PhysKey::from_ordinal(int ordinal) {
  if (ordinal < 0 || ordinal >= kKeyCount) {
    throw ConfigError("key ordinal out of range: " + std::to_string(ordinal));
  }
  return PhysKey(static_cast<std::uint8_t>(ordinal));
}

std::optional<PhysKey> PhysKey::try_parse(std::string_view name) {
  for (int i = 0; i < kKeyCount; ++i) {
    if (kKeys[i].name == name) return PhysKey(static_cast<std::uint8_t>(i));
  }
  return std::nullopt;
}

PhysKey PhysKey::parse(std::string_view name) {
  if (auto key = try_parse(name)) return *key;
  throw DataError("unknown key identifier '" + std::string(name) + "'");
}

std::string_view PhysKey::name() const { return kKeys[ordinal_].name; }

int key_ordinal(PhysKey key) { return key.ordinal(); }
int key_ordinal(std::string_view name) { return PhysKey::parse(name).ordinal(); }

const std::array<PhysKey, kKeyCount>& all_keys() {
  static const auto keys = make_all_keys();
  return keys;
}

bool key_in_layout(PhysKey key, Layout layout) {
  const auto& info = kKeys[key.ordinal()];
  return layout == Layout::de ? info.in_de : info.in_us;
}

std::vector<PhysKey> layout_keys(Layout layout) {
  std::vector<PhysKey> keys;
  for (auto key : all_keys()) {
    if (key_in_layout(key, layout)) keys.push_back(key);
  }
  return keys;
}

ArmSide typing_arm(PhysKey key) { return kKeys[key.ordinal()].arm; }

std::string_view key_label(PhysKey key, Layout layout) {
  const auto& info = kKeys[key.ordinal()];
  if (!key_in_layout(key, layout)) return {};
  return layout == Layout::de ? info.de : info.us;
}

std::optional<std::vector<PhysKey>> word_to_keys(std::string_view utf8_word,
                                                 Layout layout) {
  std::vector<PhysKey> keys;
  std::size_t pos = 0;
  while (pos < utf8_word.size()) {
    const auto len = std::min(utf8_length(static_cast<unsigned char>(utf8_word[pos])),
                              utf8_word.size() - pos);
    const auto ch = utf8_word.substr(pos, len);
    pos += len;
    const auto& keys_all = all_keys();
    auto it = std::find_if(keys_all.begin(), keys_all.end(), [&](PhysKey k) {
      const auto label = key_label(k, layout);
      return !label.empty() && label == ch;
    });
    if (it == keys_all.end()) return std::nullopt;
    keys.push_back(*it);
  }
  return keys;
}

std::string_view to_string(Layout layout) { return layout == Layout::de ? "DE" : "US"; }

Layout parse_layout(std::string_view text) {
  if (text == "DE" || text == "de") return Layout::de;
  if (text == "US" || text == "us") return Layout::us;
  throw DataError("unknown layout '" + std::string(text) + "'");
}

}  // namespace emgkey
