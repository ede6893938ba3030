#pragma once

namespace feddc {

inline constexpr const char* kVersion = "0.1.0";

} // namespace feddc
