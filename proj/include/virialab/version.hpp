#pragma once

namespace virialab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace virialab
