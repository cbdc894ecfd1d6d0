#pragma once

namespace cgbench {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace cgbench
