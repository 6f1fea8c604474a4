#pragma once

namespace leakbench {

inline constexpr const char* kVersion = "0.1.0";

} // namespace leakbench
