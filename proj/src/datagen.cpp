#include "matnet/datagen.hpp"

#include <string>

#include <Eigen/Eigenvalues>

#include "matnet/errors.hpp"

namespace matnet {

namespace {

bool compliance_is_pd(const ElasticOrthotropic& m) {
    Mat3 s;
    s << 1.0 / m.e11, -m.nu12 / m.e11, -m.nu13 / m.e11,
        -m.nu12 / m.e11, 1.0 / m.e22, -m.nu23 / m.e22,
        -m.nu13 / m.e11, -m.nu23 / m.e22, 1.0 / m.e33;
    Eigen::SelfAdjointEigenSolver<Mat3> eig(s, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    // Reject nearly singular samples as well; they make degenerate laminates.
    return lo > 1e-9 * hi;
}

} // namespace

ElasticOrthotropic sample_orthotropic_constants(const SamplingConfig& cfg, Rng& rng) {
    for (int attempt = 0; attempt < cfg.max_rejections; ++attempt) {
        ElasticOrthotropic m;
        m.e11 = rng.log_uniform(cfg.e_min, cfg.e_max);
        m.e22 = rng.log_uniform(cfg.e_min, cfg.e_max);
        m.e33 = rng.log_uniform(cfg.e_min, cfg.e_max);
        m.g12 = rng.log_uniform(cfg.g_min, cfg.g_max);
        m.g13 = rng.log_uniform(cfg.g_min, cfg.g_max);
        m.g23 = rng.log_uniform(cfg.g_min, cfg.g_max);
        m.nu12 = rng.uniform(cfg.nu_min, cfg.nu_max);
        m.nu13 = rng.uniform(cfg.nu_min, cfg.nu_max);
        m.nu23 = rng.uniform(cfg.nu_min, cfg.nu_max);
        if (compliance_is_pd(m)) return m;
    }
    throw ConfigError("orthotropic sampling rejected " + std::to_string(cfg.max_rejections) +
                      " consecutive draws; check the configured ranges");
}

Stiffness6 sample_orthotropic(const SamplingConfig& cfg, Rng& rng) {
    return stiffness_of(sample_orthotropic_constants(cfg, rng));
}

Dataset generate_dataset(const Model& oracle, const DatagenConfig& cfg) {
    if (cfg.sample_count < 1) throw ConfigError("sample_count must be positive");
    Dataset out;
    out.seed = cfg.seed;
    out.provenance = std::string(oracle.type() == ModelType::dmn ? "dmn" : "imn") + "-oracle-depth" +
                     std::to_string(oracle.topology.depth) + "-seed" + std::to_string(cfg.seed);
    out.samples.reserve(static_cast<std::size_t>(cfg.sample_count));
    Rng rng(derive_seed(cfg.seed, 0xda7a));
    for (int i = 0; i < cfg.sample_count; ++i) {
        TrainingSample s;
        s.phase1 = sample_orthotropic(cfg.sampling, rng);
        s.phase2 = sample_orthotropic(cfg.sampling, rng);
        s.target = forward_model(oracle, s.phase1, s.phase2);
        out.samples.push_back(s);
    }
    return out;
}

} // namespace matnet
