#pragma once

namespace tk {
inline constexpr const char* kVersion = "0.3.0";
}
