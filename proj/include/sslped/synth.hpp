#pragma once

#include "sslped/sequence_io.hpp"

#include <cstdint>
#include <string_view>

namespace sslped {

enum class Texture { bar_pattern, checker };

std::string_view to_string(Texture texture);
Texture parse_texture(std::string_view text);

struct SynthConfig {
    std::uint64_t seed = 1;
    int frames = 100;
    int width = 320;
    int height = 240;
    double fps = 30.0;
    int n_targets = 3;
    int min_target_h = 50;
    int max_target_h = 150;
    double min_speed = 2.0;  // px per frame at the generated rate
    double max_speed = 4.0;
    double vertical_drift = 0.15;  // max |vy| / |v|
    double jitter = 0.3;     // px, per-frame positional noise
    Texture texture = Texture::bar_pattern;
    double noise_sigma = 6.0;
    int distractors = 2;     // concurrently visible target-like patches
    int distractor_min_life = 1;
    int distractor_max_life = 3;

    void validate() const;
};

/// Deterministic sequence of moving textured targets over a static
/// background, with short-lived static distractors. With frame_stride > 1
/// only every stride-th frame is rendered; the result equals
/// subsample_fps(generate(cfg), cfg.fps / frame_stride).
ImageSequence generate(const SynthConfig& cfg, int frame_stride = 1);

struct SynthSplit {
    ImageSequence train;
    ImageSequence test;
};

/// One continuous simulation cut into train | gap | test (frame counts at the
/// output rate), rendered at fps / frame_stride.
SynthSplit generate_split(const SynthConfig& cfg, int train_frames, int gap_frames, int test_frames,
                          int frame_stride = 1);

}  // namespace sslped
