#pragma once

namespace fatdual {

inline constexpr const char* library_version = "0.1.0";

// Default seed for all randomized kernels; override per call or via FATDUAL_SEED.
inline constexpr unsigned long long default_seed = 0x00C0FFEEULL;

} // namespace fatdual
