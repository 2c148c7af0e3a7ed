#pragma once

namespace umae {

inline constexpr const char* kVersion = "0.1.0";

} // namespace umae
