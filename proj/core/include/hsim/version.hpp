#pragma once

namespace hsim {

inline constexpr const char* kToolName = "hsim";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace hsim
