#pragma once

namespace skelact {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace skelact
