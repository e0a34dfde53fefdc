#pragma once

namespace ttfm {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ttfm
