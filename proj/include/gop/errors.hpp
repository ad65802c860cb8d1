#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gop {

// Every failure raised by the library carries one of these categories. The
// CLI maps each category to its own exit code, so the numeric values are part
// of the command-line contract and must not be renumbered.
enum class ErrorCategory : int {
  argument = 4,
  domain = 5,
  non_equivalence = 6,
  arbitrage = 7,
  infeasible_view = 8,
  unsupported_view = 9,
  coverage = 10,
  rank_deficient = 11,
  wipeout = 12,
  certain_ruin = 13,
  io = 2,
  parse = 3,
  internal = 14,
};

inline constexpr std::string_view category_name(ErrorCategory c) noexcept {
  switch (c) {
    case ErrorCategory::argument: return "argument";
    case ErrorCategory::domain: return "domain";
    case ErrorCategory::non_equivalence: return "non_equivalence";
    case ErrorCategory::arbitrage: return "arbitrage";
    case ErrorCategory::infeasible_view: return "infeasible_view";
    case ErrorCategory::unsupported_view: return "unsupported_view";
    case ErrorCategory::coverage: return "coverage";
    case ErrorCategory::rank_deficient: return "rank_deficient";
    case ErrorCategory::wipeout: return "wipeout";
    case ErrorCategory::certain_ruin: return "certain_ruin";
    case ErrorCategory::io: return "io";
    case ErrorCategory::parse: return "parse";
    case ErrorCategory::internal: return "internal";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

namespace detail {

[[noreturn]] inline void fail(ErrorCategory c, const std::string& what) {
  throw Error(c, what);
}

inline void require(bool ok, ErrorCategory c, const char* what) {
  if (!ok) throw Error(c, what);
}

}  // namespace detail

}  // namespace gop
