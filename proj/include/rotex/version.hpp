#pragma once

namespace rotex {

inline constexpr const char* kToolName = "rotex";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace rotex
