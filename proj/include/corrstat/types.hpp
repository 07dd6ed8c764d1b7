#pragma once

#include <Eigen/Dense>
#include <string>

namespace corrstat {

using Index = Eigen::Index;

/// Half-open range of time indices [begin, begin + length), 0-based.
struct IndexRange {
  Index begin = 0;
  Index length = 0;

  Index end() const noexcept { return begin + length; }
  bool operator==(const IndexRange&) const = default;

  std::string str() const {
    return "[" + std::to_string(begin) + "," + std::to_string(end()) + ")";
  }
};

/// How a return panel was standardized.
struct Scope {
  enum class Kind { none, global, per_window };

  Kind kind = Kind::none;
  Index window_len = 0;  ///< only meaningful for per_window

  static Scope none() { return {}; }
  static Scope global() { return {Kind::global, 0}; }
  static Scope per_window(Index len) { return {Kind::per_window, len}; }

  bool operator==(const Scope&) const = default;

  std::string str() const {
    switch (kind) {
      case Kind::global: return "global";
      case Kind::per_window: return "per-window(" + std::to_string(window_len) + ")";
      default: return "none";
    }
  }
};

}  // namespace corrstat
