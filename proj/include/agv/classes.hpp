#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string_view>

namespace agv {

inline constexpr int kNumClasses = 9;
inline constexpr int kBackground = 0;

/// Class index in [0, 8]. 0 is Background, 1..8 are the foreground patterns
/// in the order Double Plant, Drydown, Endrow, Nutrient Deficiency,
/// Planter Skip, Water, Waterway, Weed Cluster.
class ClassId {
 public:
  constexpr explicit ClassId(int index);
  constexpr int index() const noexcept { return index_; }
  friend constexpr bool operator==(ClassId, ClassId) = default;

 private:
  int index_;
};

inline constexpr std::array<std::string_view, kNumClasses> kClassNames = {
    "Background",   "Double Plant", "Drydown",  "Endrow",       "Nutrient Deficiency",
    "Planter Skip", "Water",        "Waterway", "Weed Cluster",
};

// Directory names under labels/ in the dataset layout. Background has none.
inline constexpr std::array<std::string_view, kNumClasses> kClassDirNames = {
    "",             "double_plant", "drydown",  "endrow",       "nutrient_deficiency",
    "planter_skip", "water",        "waterway", "weed_cluster",
};

// Short column headers used by the IoU table.
inline constexpr std::array<std::string_view, kNumClasses> kClassAbbrev = {
    "BG", "DP", "D", "E", "ND", "PS", "W", "WW", "WC",
};

/// Per-pixel label set: bit c is set when class c is present.
using LabelSet = std::uint16_t;

inline constexpr LabelSet kForegroundBits = 0x1FE;
inline constexpr LabelSet kAllClassBits = 0x1FF;

constexpr LabelSet class_bit(int c) { return static_cast<LabelSet>(1u << c); }

bool is_valid_class(int index) noexcept;

/// Lowest class index present in a non-empty label set, or -1.
int lowest_class(LabelSet set) noexcept;

constexpr ClassId::ClassId(int index) : index_(index) {
  if (index < 0 || index >= kNumClasses) {
    throw std::out_of_range("class index out of range");
  }
}

}  // namespace agv
