#pragma once

namespace monogp {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace monogp
