// version.hpp — Library version and file format identifiers.
#pragma once

namespace hamscope {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kFormatVersion = 1;

}  // namespace hamscope
