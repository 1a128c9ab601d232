#pragma once

#include "sslped/detector.hpp"
#include "sslped/evaluation.hpp"
#include "sslped/run_config.hpp"

#include <array>
#include <string>
#include <vector>

namespace sslped {

/// One column of the experiment matrix.
struct Variant {
    std::string name;
    bool ssl = false;
    VolumeMode mode = VolumeMode::projection;
    bool flow_hist = false;
};

/// Base, SSL(Base) proj/optfl, Base+HOF, SSL(Base+HOF).
std::vector<Variant> standard_variants();

struct VariantResult {
    Variant variant;
    std::array<double, 3> lamr{};  // indexed by Subset
    DetectionStats stats;
    double seconds = 0.0;          // training + detection

    [[nodiscard]] double lamr_of(Subset subset) const { return lamr[static_cast<std::size_t>(subset)]; }
};

struct ExperimentResult {
    double fps = 0.0;
    std::uint64_t seed = 0;
    std::vector<VariantResult> variants;

    [[nodiscard]] const VariantResult& find(const std::string& name) const;
};

/// Generates the synthetic split at synth.fps / frame_stride, trains every
/// variant on the train part and evaluates it on the test part. Variants
/// sharing channels share the base classifier.
ExperimentResult run_experiment(const RunConfig& cfg, const std::vector<Variant>& variants, int frame_stride = 1);

}  // namespace sslped
