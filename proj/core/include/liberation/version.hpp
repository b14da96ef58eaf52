#pragma once

namespace liberation {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace liberation
