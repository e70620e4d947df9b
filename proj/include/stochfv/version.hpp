#pragma once

namespace stochfv {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace stochfv
