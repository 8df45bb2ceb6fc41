#pragma once

namespace sustain5g {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace sustain5g
