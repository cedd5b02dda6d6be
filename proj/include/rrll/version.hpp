#pragma once

namespace rrll {

inline constexpr const char* k_project_name = "rrll";
inline constexpr const char* k_version = "0.1.0";

} // namespace rrll
