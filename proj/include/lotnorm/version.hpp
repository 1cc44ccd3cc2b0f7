#pragma once

namespace lotnorm {

inline constexpr const char* kToolkitVersion = "0.1.0";
inline constexpr int kModelFormatVersion = 1;

}  // namespace lotnorm
