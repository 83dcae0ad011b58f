#pragma once

namespace pidon {
inline constexpr const char* kVersion = "0.1.0";
}
