#pragma once

namespace cfdim {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace cfdim
