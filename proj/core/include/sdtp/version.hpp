#pragma once

namespace sdtp {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace sdtp
