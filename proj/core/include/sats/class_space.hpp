#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sats {

inline constexpr std::uint8_t kIgnoreIndex = 255;

/// Class-index conventions shared by every module.
///
/// Known classes are 0..K-1, the single collapsed "unknown" class is K and
/// pixels excluded from losses and metrics carry kIgnoreIndex.
struct ClassSpace {
  int num_known = 3;
  int num_private = 0;
  std::vector<int> head_classes;

  int unknown_index() const { return num_known; }
  int num_outputs() const { return num_known + 1; }
  bool is_known(int c) const { return c >= 0 && c < num_known; }
  bool is_head(int c) const;

  /// Throws ValidationError when an invariant does not hold. `open_set`
  /// additionally requires at least one private class.
  void validate(bool open_set = false) const;

  bool operator==(const ClassSpace&) const = default;
};

std::string to_string(const ClassSpace& cs);

}  // namespace sats
