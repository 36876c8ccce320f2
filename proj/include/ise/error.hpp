#pragma once

#include <atomic>
#include <iostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ise {

enum class ErrorCode {
  degenerate_input,  // zero-norm vector, empty member list
  empty_state,       // nothing to cluster / score
  config,            // invalid user configuration
  out_of_range,      // index outside the valid domain
  invariant,         // internal invariant violated
  parse,             // malformed input file
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::degenerate_input: return "degenerate_input";
    case ErrorCode::empty_state: return "empty_state";
    case ErrorCode::config: return "config";
    case ErrorCode::out_of_range: return "out_of_range";
    case ErrorCode::invariant: return "invariant";
    case ErrorCode::parse: return "parse";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

namespace detail {
inline std::atomic<bool>& quiet_flag() {
  static std::atomic<bool> quiet{false};
  return quiet;
}
}  // namespace detail

inline void set_quiet(bool quiet) { detail::quiet_flag().store(quiet); }

// Warnings go to stderr unless silenced; they never change results.
inline void warn(std::string_view msg) {
  if (!detail::quiet_flag().load()) std::cerr << "WARN " << msg << '\n';
}

}  // namespace ise
