#pragma once

#include <random>

namespace irtrank {

// Uniform draw in [0,1) from the top 53 bits. std::uniform_real_distribution is
// implementation-defined; this keeps seeded output identical across standard libraries.
inline double uniform01(std::mt19937_64& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

}  // namespace irtrank
