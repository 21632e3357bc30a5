#pragma once

namespace gantruth {
inline constexpr const char* kVersion = "0.1.0";
}
