#pragma once

namespace qhe {

inline constexpr const char* kVersion = "0.1.0";

} // namespace qhe
