#pragma once

#include "sslped/features.hpp"
#include "sslped/model.hpp"
#include "sslped/sequence_io.hpp"

#include <cstddef>
#include <deque>
#include <vector>

namespace sslped {

struct PyramidConfig {
    int scales_per_octave = 8;
    int stride = 8;  // pixels at every level; multiple of the cell size
    void validate(const ChannelConfig& channels) const;
};

struct PyramidLevel {
    double scale = 1.0;
    Frame image;
};

/// Geometric image pyramid, scales strictly decreasing from 1.
struct Pyramid {
    std::vector<PyramidLevel> levels;
    double scale_factor = 1.0;
};

/// Levels at scale 2^(-i/scales_per_octave) while the resampled frame still
/// holds a full window.
Pyramid build_pyramid(const Frame& frame, int window_w, int window_h, const PyramidConfig& cfg);

/// Scales only, without resampling.
std::vector<double> pyramid_scales(int width, int height, int window_w, int window_h,
                                   const PyramidConfig& cfg);

/// Placement of the window grid on one padded pyramid level.
struct LevelGeometry {
    double scale = 1.0;
    int pad_x = 0;
    int pad_y = 0;
    int stride = 8;
    int rows = 0;  // window grid rows
    int cols = 0;  // window grid cols
};

/// Window position on the scan grid.
struct WindowRef {
    int level = 0;
    int gx = 0;
    int gy = 0;

    friend bool operator==(const WindowRef&, const WindowRef&) = default;
};

/// Window grid node -> box in original image coordinates.
BBox window_box(const LevelGeometry& level, int gx, int gy, const ChannelConfig& channels);

/// Original-image point -> nearest grid column/row on a level (unclamped).
int nearest_grid_x(const LevelGeometry& level, double x);
int nearest_grid_y(const LevelGeometry& level, double y);

/// Settings shared by everything that scans frames.
struct ScanConfig {
    ChannelConfig channels;
    PyramidConfig pyramid;
    int flow_block = 8;
    int flow_radius = 6;

    void validate() const;
};

/// Channels of every pyramid level of one frame.
struct FrameFeatures {
    int frame_index = 0;
    std::vector<LevelGeometry> levels;
    std::vector<FeatureChannels> channels;

    [[nodiscard]] std::size_t window_count() const;
};

/// Resample, mirror-pad by half a window, compute channels per level.
FrameFeatures compute_frame_features(const Frame& frame, const ScanConfig& cfg,
                                     const FlowField* flow = nullptr);

/// Level geometries without computing channels.
std::vector<LevelGeometry> level_geometries(int width, int height, const ScanConfig& cfg);

/// Best-IoU window over all levels for a target box.
struct WindowMatch {
    WindowRef window;
    BBox box;
    double iou = 0.0;
};
WindowMatch best_window(const std::vector<LevelGeometry>& levels, const BBox& target,
                        const ChannelConfig& channels);

Descriptor window_descriptor(const FrameFeatures& features, const WindowRef& window);

/// Cached base-classifier scores over one level's window grid.
struct ScoreMap {
    int rows = 0;
    int cols = 0;
    std::vector<double> scores;

    [[nodiscard]] double at(int row, int col) const
    {
        return scores[static_cast<std::size_t>(row) * cols + col];
    }
};

ScoreMap score_level(const FeatureChannels& channels, const LevelGeometry& level,
                     const LinearModel& model);

struct FrameScores {
    int frame_index = 0;
    std::vector<LevelGeometry> levels;
    std::vector<ScoreMap> maps;
};

FrameScores score_frame(const FrameFeatures& features, const LinearModel& model);

/// Keeps the most recent `capacity` frames of score maps (0 = unbounded).
class ScoreMapStore {
public:
    explicit ScoreMapStore(std::size_t capacity = 0) : capacity_(capacity) {}

    void put(FrameScores scores);
    [[nodiscard]] const FrameScores* find(int frame_index) const;
    [[nodiscard]] std::size_t size() const { return frames_.size(); }
    [[nodiscard]] std::size_t capacity() const { return capacity_; }

private:
    std::size_t capacity_;
    std::deque<FrameScores> frames_;
};

/// Block-matching flow into every frame from its predecessor; entry 0 is zero.
std::vector<FlowField> compute_sequence_flows(const ImageSequence& seq, int block_size,
                                              int search_radius);

}  // namespace sslped
