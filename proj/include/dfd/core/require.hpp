#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace dfd {

/// Concatenates the arguments into a string via operator<<.
template <class... Ts>
std::string cat(Ts&&... parts) {
  std::ostringstream os;
  (os << ... << parts);
  return os.str();
}

[[noreturn]] inline void fail_precondition(const std::string& msg) {
  throw std::invalid_argument(msg);
}

[[noreturn]] inline void fail_runtime(const std::string& msg) {
  throw std::runtime_error(msg);
}

}  // namespace dfd

/// Precondition check: throws std::invalid_argument when violated.
#define DFD_REQUIRE(cond, ...)                         \
  do {                                                 \
    if (!(cond)) ::dfd::fail_precondition(::dfd::cat(__VA_ARGS__)); \
  } while (0)

/// Runtime (numeric) check: throws std::runtime_error when violated.
#define DFD_ENSURE(cond, ...)                      \
  do {                                             \
    if (!(cond)) ::dfd::fail_runtime(::dfd::cat(__VA_ARGS__)); \
  } while (0)
