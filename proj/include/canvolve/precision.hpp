#pragma once

// Element precision is fixed per build of the nn library: CANVOLVE_USE_DOUBLE=1
// selects 64-bit verification mode, 0 selects 32-bit fast mode. Each mode
// lives in its own inline namespace so both can be linked into one binary.

#ifndef CANVOLVE_USE_DOUBLE
#error "CANVOLVE_USE_DOUBLE must be defined (link canvolve_nn_f32 or canvolve_nn_f64)"
#endif

#if CANVOLVE_USE_DOUBLE
#define CANVOLVE_PRECISION_NS f64
#else
#define CANVOLVE_PRECISION_NS f32
#endif

namespace canvolve {
inline namespace CANVOLVE_PRECISION_NS {

#if CANVOLVE_USE_DOUBLE
using Real = double;
#else
using Real = float;
#endif

inline constexpr const char* kPrecisionName = CANVOLVE_USE_DOUBLE ? "f64" : "f32";

}  // namespace CANVOLVE_PRECISION_NS
}  // namespace canvolve
