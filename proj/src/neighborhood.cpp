#include "sslped/neighborhood.hpp"

#include "sslped/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sslped {

std::string_view to_string(TemporalStyle style)
{
    switch (style) {
    case TemporalStyle::past:
        return "past";
    case TemporalStyle::future:
        return "future";
    case TemporalStyle::centered:
        return "centered";
    }
    return "?";
}

std::string_view to_string(VolumeMode mode)
{
    return mode == VolumeMode::projection ? "projection" : "optical_flow";
}

TemporalStyle parse_temporal_style(std::string_view text)
{
    if (text == "past") {
        return TemporalStyle::past;
    }
    if (text == "future") {
        return TemporalStyle::future;
    }
    if (text == "centered") {
        return TemporalStyle::centered;
    }
    throw UsageError("unknown temporal style '" + std::string(text) + "'");
}

VolumeMode parse_volume_mode(std::string_view text)
{
    if (text == "projection") {
        return VolumeMode::projection;
    }
    if (text == "optical_flow") {
        return VolumeMode::optical_flow;
    }
    throw UsageError("unknown volume mode '" + std::string(text) + "'");
}

int NeighborhoodSpec::frames_before() const
{
    switch (style) {
    case TemporalStyle::past:
        return T - 1;
    case TemporalStyle::future:
        return 0;
    case TemporalStyle::centered:
        return (T - 1) / 2;
    }
    return 0;
}

int NeighborhoodSpec::frames_after() const { return T - 1 - frames_before(); }

void NeighborhoodSpec::validate() const
{
    if (nx < 0 || ny < 0) {
        throw UsageError("neighborhood nx, ny must be >= 0");
    }
    if (T < 1) {
        throw UsageError("neighborhood T must be >= 1");
    }
    if (style == TemporalStyle::centered && T % 2 == 0) {
        throw UsageError("centered neighborhood needs odd T");
    }
    if (step_x <= 0 || step_y <= 0) {
        throw UsageError("neighborhood step must be positive");
    }
}

WindowTrack build_track(const BBox& window, int frame_index, const NeighborhoodSpec& spec, FrameRange range,
                        const FlowLookup& flows)
{
    spec.validate();
    const int before = spec.frames_before();
    const auto n = static_cast<std::size_t>(spec.T);
    const auto anchor = static_cast<std::size_t>(before);
    WindowTrack track;
    track.mode = spec.mode;
    track.frames.resize(n);
    track.windows.assign(n, window);
    for (std::size_t k = 0; k < n; ++k) {
        const int f = frame_index - before + static_cast<int>(k);
        track.frames[k] = std::clamp(f, range.first, range.last);
    }
    if (spec.mode == VolumeMode::projection) {
        return track;
    }
    const auto flow_into = [&](int frame) -> const FlowField& {
        const FlowField* flow = flows ? flows(frame) : nullptr;
        if (flow == nullptr) {
            throw UsageError("optical_flow volume needs the flow into frame " + std::to_string(frame));
        }
        return *flow;
    };
    const auto shift = [](BBox b, FlowVector t, double sign) {
        b.x += static_cast<int>(std::lround(sign * t.du));
        b.y += static_cast<int>(std::lround(sign * t.dv));
        return b;
    };
    // Backward: W_{f-1} = W_f - t(flow f-1 -> f over W_f).
    for (std::size_t k = anchor; k-- > 0;) {
        if (track.frames[k] == track.frames[k + 1]) {
            track.windows[k] = track.windows[k + 1];
            continue;
        }
        const auto& flow = flow_into(track.frames[k + 1]);
        track.windows[k] = shift(track.windows[k + 1], mean_flow_in_window(flow, track.windows[k + 1]), -1.0);
    }
    // Forward: W_{f+1} = W_f + t(flow f -> f+1 over W_f).
    for (std::size_t k = anchor + 1; k < n; ++k) {
        if (track.frames[k] == track.frames[k - 1]) {
            track.windows[k] = track.windows[k - 1];
            continue;
        }
        const auto& flow = flow_into(track.frames[k]);
        track.windows[k] = shift(track.windows[k - 1], mean_flow_in_window(flow, track.windows[k - 1]), 1.0);
    }
    return track;
}

}  // namespace sslped
