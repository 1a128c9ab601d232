#pragma once

#include "sslped/geometry.hpp"
#include "sslped/sequence_io.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace sslped {

inline constexpr int kGradBins = 9;
inline constexpr int kGradBlockBins = 4 * kGradBins;  // 2x2 cells per block
inline constexpr int kLbpBins = 59;
inline constexpr int kFlowBins = 10;                  // 9 orientations + magnitude

/// Which dense channels to compute and the detection window they describe.
struct ChannelConfig {
    bool grad_hist = true;
    bool lbp_hist = true;
    bool flow_hist = false;
    int cell_size = 8;
    int window_w = 24;
    int window_h = 48;

    [[nodiscard]] int window_cells_x() const { return window_w / cell_size; }
    [[nodiscard]] int window_cells_y() const { return window_h / cell_size; }

    /// Closed-form descriptor length for the configured window.
    [[nodiscard]] std::size_t descriptor_length() const;
    /// Stable hash of everything that shapes the descriptor layout.
    [[nodiscard]] std::uint64_t layout_id() const;
    [[nodiscard]] std::string describe() const;

    /// Throws UsageError on an unusable configuration.
    void validate() const;

    friend bool operator==(const ChannelConfig&, const ChannelConfig&) = default;
};

enum class ChannelKind { grad_hist, lbp_hist, flow_hist };

/// Histogram bins laid out on the cell grid, row-major [row][col][bin].
struct ChannelGrid {
    ChannelKind kind = ChannelKind::grad_hist;
    int rows = 0;
    int cols = 0;
    int bins = 0;
    std::vector<float> values;

    [[nodiscard]] const float* cell(int row, int col) const
    {
        return values.data() + (static_cast<std::size_t>(row) * cols + col) * bins;
    }
    float* cell(int row, int col)
    {
        return values.data() + (static_cast<std::size_t>(row) * cols + col) * bins;
    }
};

/// Dense channels of one image. Every plane shares the cell grid; the
/// gradient plane stores at (r, c) the normalized 2x2 block whose top-left
/// cell is (r, c), zero in the last row and column.
struct FeatureChannels {
    int frame_index = 0;
    double scale = 1.0;
    int cell_size = 8;
    ChannelConfig config;
    std::vector<ChannelGrid> planes;

    [[nodiscard]] int rows() const { return planes.empty() ? 0 : planes.front().rows; }
    [[nodiscard]] int cols() const { return planes.empty() ? 0 : planes.front().cols; }
};

/// Per-block displacement field in pixels per frame.
struct FlowField {
    int rows = 0;
    int cols = 0;
    int block_size = 8;
    std::vector<float> u;
    std::vector<float> v;

    FlowField() = default;
    FlowField(int rows_, int cols_, int block_size_);

    [[nodiscard]] float u_at(int row, int col) const { return u[static_cast<std::size_t>(row) * cols + col]; }
    [[nodiscard]] float v_at(int row, int col) const { return v[static_cast<std::size_t>(row) * cols + col]; }

    friend bool operator==(const FlowField&, const FlowField&) = default;
};

struct Descriptor {
    std::vector<float> values;
    std::uint64_t layout_id = 0;
};

struct FlowVector {
    double du = 0.0;
    double dv = 0.0;
};

/// Computes the configured channels of a frame. `flow`, required when
/// flow_hist is on, must be sampled in the frame's own pixel coordinates.
FeatureChannels compute_channels(const Frame& frame, const ChannelConfig& config,
                                 const FlowField* flow = nullptr);

/// Concatenates the histograms under a cell-aligned window: channel-major,
/// then row-major over cells (blocks for the gradient channel).
Descriptor extract_descriptor(const FeatureChannels& channels, const BBox& window);

/// Descriptor for a configuration-sized window whose top-left cell is
/// (cell_x, cell_y); no bounds checks beyond assertions.
void extract_window(const FeatureChannels& channels, int cell_x, int cell_y, std::span<float> out);

/// Dot product of `weights` with the descriptor of the configuration-sized
/// window whose top-left cell is (cell_x, cell_y), without materializing it.
double window_dot(const FeatureChannels& channels, int cell_x, int cell_y,
                  std::span<const double> weights);

/// Block-matching flow: for every block of `prev`, the integer displacement
/// into `curr` with minimal sum of absolute differences.
FlowField compute_flow(const Frame& prev, const Frame& curr, int block_size, int search_radius);

/// Mean (u, v) over blocks whose centers fall inside the window.
FlowVector mean_flow_in_window(const FlowField& flow, const BBox& window);

/// All-zero field matching the block grid of a frame.
FlowField zero_flow(int width, int height, int block_size);

/// Resamples a flow field onto a scaled and padded image (block size 1),
/// scaling the vectors with the image.
FlowField resample_flow(const FlowField& flow, double scale, int pad_x, int pad_y,
                        int out_width, int out_height);

Frame resample_bilinear(const Frame& frame, int out_width, int out_height);

/// Symmetric mirror padding (edge pixel repeated).
Frame mirror_pad(const Frame& frame, int pad_x, int pad_y);

/// Uniform LBP-8,1 code of the pixel, mapped to 0..58 (58 = non-uniform).
int uniform_lbp_bin(const Frame& frame, int x, int y);

}  // namespace sslped
