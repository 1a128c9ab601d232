#pragma once

#include "sslped/features.hpp"
#include "sslped/geometry.hpp"

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace sslped {

enum class TemporalStyle { past, future, centered };
enum class VolumeMode { projection, optical_flow };

std::string_view to_string(TemporalStyle style);
std::string_view to_string(VolumeMode mode);
TemporalStyle parse_temporal_style(std::string_view text);
VolumeMode parse_volume_mode(std::string_view text);

/// Spatiotemporal neighborhood: (2nx+1) x (2ny+1) displacements of
/// (step_x, step_y) pixels around the window, in each of T frames.
struct NeighborhoodSpec {
    int nx = 3;
    int ny = 3;
    int step_x = 8;
    int step_y = 8;
    int T = 5;
    TemporalStyle style = TemporalStyle::past;
    VolumeMode mode = VolumeMode::projection;

    [[nodiscard]] std::size_t score_count() const
    {
        return static_cast<std::size_t>(2 * nx + 1) * static_cast<std::size_t>(2 * ny + 1) *
               static_cast<std::size_t>(T);
    }
    /// Frames before the anchor frame covered by the volume.
    [[nodiscard]] int frames_before() const;
    /// Frames after the anchor frame covered by the volume.
    [[nodiscard]] int frames_after() const;

    void validate() const;

    friend bool operator==(const NeighborhoodSpec&, const NeighborhoodSpec&) = default;
};

/// Inclusive frame range a track may touch; frames outside are clamped.
struct FrameRange {
    int first = 0;
    int last = 0;
};

/// Window volume: one box per neighborhood frame, oldest first.
struct WindowTrack {
    std::vector<BBox> windows;
    std::vector<int> frames;
    VolumeMode mode = VolumeMode::projection;
};

/// Flow from frame f-1 to frame f, or nullptr when unavailable.
using FlowLookup = std::function<const FlowField*(int frame)>;

/// Builds the volume anchored at `window` in `frame_index`. Projection mode
/// repeats the window; flow mode chains it through the per-frame mean flow.
WindowTrack build_track(const BBox& window, int frame_index, const NeighborhoodSpec& spec,
                        FrameRange range, const FlowLookup& flows = {});

}  // namespace sslped
