#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "matnet/voigt.hpp"

namespace matnet {

/// One supervised sample: the two phase stiffnesses and the homogenized
/// target stiffness.
struct TrainingSample {
    Stiffness6 phase1;
    Stiffness6 phase2;
    Stiffness6 target;
};

struct Dataset {
    std::vector<TrainingSample> samples;
    std::string provenance; // generator description (oracle id)
    std::uint64_t seed = 0;
};

} // namespace matnet
