#pragma once

namespace qsa {

#ifdef QSA_VERSION
inline constexpr const char* version = QSA_VERSION;
#else
inline constexpr const char* version = "unknown";
#endif

}  // namespace qsa
