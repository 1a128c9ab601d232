#pragma once

#include "sslped/evaluation.hpp"
#include "sslped/ssl_training.hpp"
#include "sslped/synth.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace sslped {

/// Train | gap | test frame counts at the output frame rate.
struct SplitConfig {
    int train_frames = 600;
    int gap_frames = 60;
    int test_frames = 300;
};

/// How neighborhood.nx / ny are read: displacements per side (2n+1 columns)
/// or the full, odd grid width (n columns).
enum class ExtentReading { per_side, grid };

std::string_view to_string(ExtentReading reading);
ExtentReading parse_extent_reading(std::string_view text);

/// Every module setting in one place. Text form:
///
///   # comment
///   [neighborhood]
///   nx = 3
///   mode = optical_flow
///
/// Unknown sections and keys are rejected.
struct RunConfig {
    SslTrainConfig train;
    EvalConfig eval;
    SynthConfig synth;
    SplitConfig split;
    ExtentReading extent_reading = ExtentReading::per_side;

    /// Training settings with the neighborhood extent resolved to per-side counts.
    [[nodiscard]] SslTrainConfig training() const;
    void validate() const;
};

RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Applies "section.key=value".
void apply_override(RunConfig& cfg, std::string_view assignment);
void set_value(RunConfig& cfg, std::string_view section, std::string_view key, std::string_view value);

/// Text form with every key at its current value; parses back to `cfg`.
std::string format_run_config(const RunConfig& cfg);

}  // namespace sslped
