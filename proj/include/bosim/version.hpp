#pragma once

namespace bosim {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace bosim
