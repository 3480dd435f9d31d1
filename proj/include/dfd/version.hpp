#pragma once

namespace dfd {

/// Library version string, embedded in experiment metadata.
inline constexpr const char* version = "0.1.0";

}  // namespace dfd
