#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace emgkey {

inline constexpr int kKeyCount = 52;

enum class Layout { de, us };

enum class ArmSide { left, right };

/// One of the 52 physical key positions of an ISO keyboard.
///
/// Identifiers follow the XKB position names (AE01 = top row digit 1,
/// AD01 = Q, AC01 = A, AB01 = Z/Y, LSGT = the ISO key right of left shift,
/// AC12 = the ISO key lower left of return). Modifier keys other than the
/// two shift keys are not part of the alphabet, neither is the dead key
/// left of digit 1. The ordinal is the class index used by all models:
///
///   0..11  AE01..AE12     12 BKSP
///  13..24  AD01..AD12     25 RTRN
///  26..37  AC01..AC12     38 LFSH    39 LSGT
///  40..49  AB01..AB10     50 RTSH    51 SPCE
///
/// AE12 is used only by the US layout; LSGT and AC12 only by the DE layout.
class PhysKey {
 public:
  /// Ordinal 0 (AE01).
  PhysKey() = default;
  /// Throws ConfigError when the ordinal is outside 0..51.
  static PhysKey from_ordinal(int ordinal);
  /// Throws DataError for identifiers outside the alphabet.
  static PhysKey parse(std::string_view name);
  static std::optional<PhysKey> try_parse(std::string_view name);

  [[nodiscard]] int ordinal() const { return ordinal_; }
  [[nodiscard]] std::string_view name() const;

  friend auto operator<=>(const PhysKey&, const PhysKey&) = default;

 private:
  explicit PhysKey(std::uint8_t ordinal) : ordinal_(ordinal) {}
  std::uint8_t ordinal_ = 0;
};

int key_ordinal(PhysKey key);
int key_ordinal(std::string_view name);

/// All 52 keys in ordinal order.
const std::array<PhysKey, kKeyCount>& all_keys();

bool key_in_layout(PhysKey key, Layout layout);
/// Keys usable under a layout (51 for DE, 50 for US), in ordinal order.
std::vector<PhysKey> layout_keys(Layout layout);

/// Arm that types the key under the synthetic key-to-arm map.
ArmSide typing_arm(PhysKey key);

/// Character produced by the unshifted key under a layout (UTF-8), empty for
/// keys without a printable character (shift, backspace, return).
std::string_view key_label(PhysKey key, Layout layout);

/// Maps a lower-case word to its key sequence; nullopt if any character has
/// no unshifted key under the layout.
std::optional<std::vector<PhysKey>> word_to_keys(std::string_view utf8_word,
                                                 Layout layout);

std::string_view to_string(Layout layout);
Layout parse_layout(std::string_view text);

}  // namespace emgkey
