#pragma once

#include <cstdint>

#include "matnet/dataset.hpp"
#include "matnet/materials.hpp"
#include "matnet/network.hpp"
#include "matnet/rng.hpp"

namespace matnet {

/// Sampling ranges for random orthotropic phase stiffnesses: moduli are
/// log-uniform (GPa), Poisson ratios uniform. Samples whose compliance is
/// not positive definite are rejected and redrawn.
struct SamplingConfig {
    double e_min = 1.0;
    double e_max = 500.0;
    double g_min = 0.3;
    double g_max = 200.0;
    double nu_min = 0.0;
    double nu_max = 0.45;
    int max_rejections = 1000;
};

ElasticOrthotropic sample_orthotropic_constants(const SamplingConfig& cfg, Rng& rng);
Stiffness6 sample_orthotropic(const SamplingConfig& cfg, Rng& rng);

struct DatagenConfig {
    SamplingConfig sampling;
    int sample_count = 500;
    std::uint64_t seed = 0;
};

/// Synthetic supervision: phase stiffness pairs are sampled and the target
/// is the oracle network's homogenized stiffness. Fully determined by
/// (oracle, seed).
Dataset generate_dataset(const Model& oracle, const DatagenConfig& cfg);

} // namespace matnet
