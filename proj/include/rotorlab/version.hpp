#pragma once

namespace rotorlab {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace rotorlab
