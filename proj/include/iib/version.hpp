#pragma once

namespace iib {

inline constexpr const char* kToolkitVersion = "0.1.0";

}  // namespace iib
