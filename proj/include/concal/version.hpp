#pragma once

namespace concal {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace concal
