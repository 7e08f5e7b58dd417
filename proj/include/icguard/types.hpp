#pragma once

#include <array>
#include <cstdint>

namespace icguard {

// Fixed channel counts of the two-vehicle intersection plant: 6 plant states,
// 4 measured outputs, 2 unmeasured canonical coordinates, 2 inputs.
inline constexpr int kNumStates = 6;
inline constexpr int kNumOutputs = 4;
inline constexpr int kNumHidden = 2;
inline constexpr int kNumInputs = 2;

using Vec2 = std::array<double, 2>;
using Vec4 = std::array<double, 4>;
using Vec6 = std::array<double, 6>;

}  // namespace icguard
