#include "sslped/features.hpp"

#include "sslped/errors.hpp"

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace sslped {

namespace {

// 58 uniform LBP-8 codes in ascending order map to 0..57, the rest to 58.
std::array<std::uint8_t, 256> make_uniform_table()
{
    std::array<std::uint8_t, 256> table{};
    int next = 0;
    for (int code = 0; code < 256; ++code) {
        int transitions = 0;
        for (int k = 0; k < 8; ++k) {
            const int a = (code >> k) & 1;
            const int b = (code >> ((k + 1) % 8)) & 1;
            transitions += a != b ? 1 : 0;
        }
        table[static_cast<std::size_t>(code)] =
            static_cast<std::uint8_t>(transitions <= 2 ? next++ : kLbpBins - 1);
    }
    return table;
}

const std::array<std::uint8_t, 256>& uniform_table()
{
    static const auto table = make_uniform_table();
    return table;
}

int clampi(int v, int lo, int hi) { return std::min(std::max(v, lo), hi); }

std::uint64_t fnv1a(const std::string& s)
{
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

ChannelGrid make_grid(ChannelKind kind, int rows, int cols, int bins)
{
    ChannelGrid g;
    g.kind = kind;
    g.rows = rows;
    g.cols = cols;
    g.bins = bins;
    g.values.assign(static_cast<std::size_t>(rows) * cols * bins, 0.0F);
    return g;
}

struct OrientationVote {
    std::uint8_t b0 = 0;
    std::uint8_t b1 = 0;
    double w0 = 0.0;
    double w1 = 0.0;
};

// Votes for every integer gradient (gx, gy) in [-255, 255]^2.
std::vector<OrientationVote> make_orientation_votes()
{
    std::vector<OrientationVote> table(511 * 511);
    const double bin_width = std::numbers::pi / kGradBins;
    for (int gy = -255; gy <= 255; ++gy) {
        for (int gx = -255; gx <= 255; ++gx) {
            const double mag = std::sqrt(static_cast<double>(gx * gx + gy * gy));
            if (mag == 0.0) {
                continue;
            }
            double angle = std::atan2(static_cast<double>(gy), static_cast<double>(gx));
            if (angle < 0.0) {
                angle += std::numbers::pi;
            }
            if (angle >= std::numbers::pi) {
                angle -= std::numbers::pi;
            }
            // Bin centers at k * 20 degrees; linear vote between the two nearest.
            const double pos = angle / bin_width;
            const int b0 = static_cast<int>(std::floor(pos));
            const double frac = pos - b0;
            auto& v = table[static_cast<std::size_t>((gy + 255) * 511 + gx + 255)];
            v.b0 = static_cast<std::uint8_t>(b0 % kGradBins);
            v.b1 = static_cast<std::uint8_t>((b0 + 1) % kGradBins);
            v.w0 = mag * (1.0 - frac);
            v.w1 = mag * frac;
        }
    }
    return table;
}

const std::vector<OrientationVote>& orientation_votes()
{
    static const auto table = make_orientation_votes();
    return table;
}

ChannelGrid grad_channel(const Frame& frame, int cell, int rows, int cols)
{
    const int w = frame.width;
    const int h = frame.height;
    std::vector<double> hist(static_cast<std::size_t>(rows) * cols * kGradBins, 0.0);
        for (int y = 0; y < rows * cell; ++y) {
        const int ym = clampi(y - 1, 0, h - 1);
        const int yp = clampi(y + 1, 0, h - 1);
        for (int x = 0; x < cols * cell; ++x) {
            const int xm = clampi(x - 1, 0, w - 1);
            const int xp = clampi(x + 1, 0, w - 1);
            const int gx = frame.at(xp, y) - frame.at(xm, y);
            const int gy = frame.at(x, yp) - frame.at(x, ym);
            const auto& vote = orientation_votes()[static_cast<std::size_t>((gy + 255) * 511 + gx + 255)];
            if (vote.w0 == 0.0 && vote.w1 == 0.0) {
                continue;
            }
            double* cell_hist = &hist[(static_cast<std::size_t>(y / cell) * cols + x / cell) * kGradBins];
            cell_hist[vote.b0] += vote.w0;
            cell_hist[vote.b1] += vote.w1;
        }
    }
    // Blocks of 2x2 cells, L2-normalized with a floor of one intensity unit per pixel.
    const double eps = static_cast<double>(cell) * cell;
    auto grid = make_grid(ChannelKind::grad_hist, rows, cols, kGradBlockBins);
    for (int r = 0; r + 1 < rows; ++r) {
        for (int c = 0; c + 1 < cols; ++c) {
            std::array<double, kGradBlockBins> block{};
            int k = 0;
            for (int dr = 0; dr < 2; ++dr) {
                for (int dc = 0; dc < 2; ++dc) {
                    const double* src = &hist[(static_cast<std::size_t>(r + dr) * cols + c + dc) * kGradBins];
                    for (int b = 0; b < kGradBins; ++b) {
                        block[static_cast<std::size_t>(k++)] = src[b];
                    }
                }
            }
            double norm2 = 0.0;
            for (double v : block) {
                norm2 += v * v;
            }
            const double inv = 1.0 / std::sqrt(norm2 + eps * eps);
            float* dst = grid.cell(r, c);
            for (int b = 0; b < kGradBlockBins; ++b) {
                dst[b] = static_cast<float>(block[static_cast<std::size_t>(b)] * inv);
            }
        }
    }
    return grid;
}

ChannelGrid lbp_channel(const Frame& frame, int cell, int rows, int cols)
{
    auto grid = make_grid(ChannelKind::lbp_hist, rows, cols, kLbpBins);
    std::vector<int> counts(static_cast<std::size_t>(rows) * cols * kLbpBins, 0);
    const auto& table = uniform_table();
    const int w = frame.width;
    for (int y = 0; y < rows * cell; ++y) {
        const bool interior_row = y > 0 && y + 1 < frame.height;
        const std::uint8_t* row = frame.pixels.data() + static_cast<std::size_t>(y) * w;
        int* cell_row = &counts[static_cast<std::size_t>(y / cell) * cols * kLbpBins];
        for (int x = 0; x < cols * cell; ++x) {
            int bin = 0;
            if (interior_row && x > 0 && x + 1 < w) {
                const std::uint8_t* p = row + x;
                const int c = *p;
                const int code = (p[1] >= c) | (p[w + 1] >= c) << 1 | (p[w] >= c) << 2 | (p[w - 1] >= c) << 3 |
                                 (p[-1] >= c) << 4 | (p[-w - 1] >= c) << 5 | (p[-w] >= c) << 6 |
                                 (p[-w + 1] >= c) << 7;
                bin = table[static_cast<std::size_t>(code)];
            } else {
                bin = uniform_lbp_bin(frame, x, y);
            }
            ++cell_row[(x / cell) * kLbpBins + bin];
        }
    }
    const double inv_total = 1.0 / (static_cast<double>(cell) * cell);
    for (std::size_t i = 0; i < counts.size(); ++i) {
        grid.values[i] = static_cast<float>(std::sqrt(counts[i] * inv_total));
    }
    return grid;
}

ChannelGrid flow_channel(const FlowField& flow, int cell, int rows, int cols)
{
    auto grid = make_grid(ChannelKind::flow_hist, rows, cols, kFlowBins);
    std::vector<double> acc(grid.values.size(), 0.0);
    const double bin_width = 2.0 * std::numbers::pi / (kFlowBins - 1);
    for (int y = 0; y < rows * cell; ++y) {
        const int fr = clampi(y / flow.block_size, 0, flow.rows - 1);
        for (int x = 0; x < cols * cell; ++x) {
            const int fc = clampi(x / flow.block_size, 0, flow.cols - 1);
            const double u = flow.u_at(fr, fc);
            const double v = flow.v_at(fr, fc);
            const double mag = std::sqrt(u * u + v * v);
            if (mag == 0.0) {
                continue;
            }
            double angle = std::atan2(v, u);
            if (angle < 0.0) {
                angle += 2.0 * std::numbers::pi;
            }
            const double pos = angle / bin_width;
            const int b0 = static_cast<int>(std::floor(pos));
            const double frac = pos - b0;
            double* dst = &acc[(static_cast<std::size_t>(y / cell) * cols + x / cell) * kFlowBins];
            dst[b0 % (kFlowBins - 1)] += mag * (1.0 - frac);
            dst[(b0 + 1) % (kFlowBins - 1)] += mag * frac;
            dst[kFlowBins - 1] += mag;
        }
    }
    const double inv = 1.0 / (static_cast<double>(cell) * cell);
    for (std::size_t i = 0; i < acc.size(); ++i) {
        grid.values[i] = static_cast<float>(acc[i] * inv);
    }
    return grid;
}

// Length of one channel's contribution to a window descriptor.
std::size_t channel_length(ChannelKind kind, int wc, int hc)
{
    switch (kind) {
    case ChannelKind::grad_hist:
        return static_cast<std::size_t>(wc - 1) * (hc - 1) * kGradBlockBins;
    case ChannelKind::lbp_hist:
        return static_cast<std::size_t>(wc) * hc * kLbpBins;
    case ChannelKind::flow_hist:
        return static_cast<std::size_t>(wc) * hc * kFlowBins;
    }
    return 0;
}

// Cells of a window a channel reads: blocks span one cell less.
std::pair<int, int> channel_span(ChannelKind kind, int wc, int hc)
{
    return kind == ChannelKind::grad_hist ? std::pair{wc - 1, hc - 1} : std::pair{wc, hc};
}

}  // namespace

std::size_t ChannelConfig::descriptor_length() const
{
    const int wc = window_cells_x();
    const int hc = window_cells_y();
    std::size_t n = 0;
    if (grad_hist) {
        n += channel_length(ChannelKind::grad_hist, wc, hc);
    }
    if (lbp_hist) {
        n += channel_length(ChannelKind::lbp_hist, wc, hc);
    }
    if (flow_hist) {
        n += channel_length(ChannelKind::flow_hist, wc, hc);
    }
    return n;
}

std::string ChannelConfig::describe() const
{
    std::ostringstream s;
    s << "grad=" << grad_hist << ";lbp=" << lbp_hist << ";flow=" << flow_hist << ";cell=" << cell_size
      << ";window=" << window_w << 'x' << window_h;
    return s.str();
}

std::uint64_t ChannelConfig::layout_id() const { return fnv1a(describe()); }

void ChannelConfig::validate() const
{
    if (!grad_hist && !lbp_hist && !flow_hist) {
        throw UsageError("channel config selects no channels");
    }
    if (cell_size < 4) {
        throw UsageError("cell_size must be >= 4");
    }
    if (window_w <= 0 || window_h <= 0 || window_w % cell_size != 0 || window_h % cell_size != 0) {
        throw UsageError("window size must be a positive multiple of cell_size");
    }
    if (grad_hist && (window_cells_x() < 2 || window_cells_y() < 2)) {
        throw UsageError("gradient blocks need a window of at least 2x2 cells");
    }
}

FlowField::FlowField(int rows_, int cols_, int block_size_)
    : rows(rows_), cols(cols_), block_size(block_size_),
      u(static_cast<std::size_t>(rows_) * cols_, 0.0F), v(static_cast<std::size_t>(rows_) * cols_, 0.0F)
{
}

FeatureChannels compute_channels(const Frame& frame, const ChannelConfig& config, const FlowField* flow)
{
    config.validate();
    frame.validate();
    const int cell = config.cell_size;
    const int cols = frame.width / cell;
    const int rows = frame.height / cell;
    if (cols < 1 || rows < 1) {
        throw DataError("frame smaller than one cell");
    }
    if (config.flow_hist && flow == nullptr) {
        throw UsageError("flow_hist requires a flow field");
    }
    FeatureChannels out;
    out.frame_index = frame.index;
    out.cell_size = cell;
    out.config = config;
    if (config.grad_hist) {
        out.planes.push_back(grad_channel(frame, cell, rows, cols));
    }
    if (config.lbp_hist) {
        out.planes.push_back(lbp_channel(frame, cell, rows, cols));
    }
    if (config.flow_hist) {
        if (flow->rows < 1 || flow->cols < 1 || flow->block_size < 1) {
            throw DataError("empty flow field");
        }
        out.planes.push_back(flow_channel(*flow, cell, rows, cols));
    }
    return out;
}

namespace {

void copy_window(const FeatureChannels& channels, int wc, int hc, int cell_x, int cell_y, std::span<float> out)
{
    std::size_t pos = 0;
    for (const auto& plane : channels.planes) {
        const auto [sx, sy] = channel_span(plane.kind, wc, hc);
        const std::size_t row_len = static_cast<std::size_t>(sx) * plane.bins;
        for (int r = 0; r < sy; ++r) {
            const float* src = plane.cell(cell_y + r, cell_x);
            assert(pos + row_len <= out.size());
            std::copy(src, src + row_len, out.begin() + static_cast<std::ptrdiff_t>(pos));
            pos += row_len;
        }
    }
    assert(pos == out.size());
}

}  // namespace

void extract_window(const FeatureChannels& channels, int cell_x, int cell_y, std::span<float> out)
{
    copy_window(channels, channels.config.window_cells_x(), channels.config.window_cells_y(), cell_x, cell_y, out);
}

double window_dot(const FeatureChannels& channels, int cell_x, int cell_y, std::span<const double> weights)
{
    const int wc = channels.config.window_cells_x();
    const int hc = channels.config.window_cells_y();
    const double* w = weights.data();
    double sum = 0.0;
    for (const auto& plane : channels.planes) {
        const auto [sx, sy] = channel_span(plane.kind, wc, hc);
        const std::size_t row_len = static_cast<std::size_t>(sx) * plane.bins;
        for (int r = 0; r < sy; ++r) {
            const float* src = plane.cell(cell_y + r, cell_x);
            double acc = 0.0;
            for (std::size_t k = 0; k < row_len; ++k) {
                acc += w[k] * static_cast<double>(src[k]);
            }
            sum += acc;
            w += row_len;
        }
    }
    return sum;
}

Descriptor extract_descriptor(const FeatureChannels& channels, const BBox& window)
{
    const int cell = channels.cell_size;
    if (window.x % cell != 0 || window.y % cell != 0 || window.w % cell != 0 || window.h % cell != 0) {
        throw DataError("window not aligned to the cell grid");
    }
    const int cx = window.x / cell;
    const int cy = window.y / cell;
    const int wc = window.w / cell;
    const int hc = window.h / cell;
    if (cx < 0 || cy < 0 || cx + wc > channels.cols() || cy + hc > channels.rows() || wc < 1 || hc < 1) {
        throw DataError("window outside the channel planes");
    }
    ChannelConfig layout = channels.config;
    layout.window_w = window.w;
    layout.window_h = window.h;
    if (layout.grad_hist && (wc < 2 || hc < 2)) {
        throw DataError("window too small for gradient blocks");
    }
    Descriptor d;
    d.layout_id = layout.layout_id();
    d.values.resize(layout.descriptor_length());
    copy_window(channels, wc, hc, cx, cy, d.values);
    return d;
}

FlowField compute_flow(const Frame& prev, const Frame& curr, int block_size, int search_radius)
{
    prev.validate();
    curr.validate();
    if (prev.width != curr.width || prev.height != curr.height) {
        throw DataError("flow frames differ in size");
    }
    if (block_size < 4 || search_radius < 1) {
        throw UsageError("flow needs block_size >= 4 and search_radius >= 1");
    }
    const int cols = prev.width / block_size;
    const int rows = prev.height / block_size;
    FlowField flow(rows, cols, block_size);
    for (int br = 0; br < rows; ++br) {
        for (int bc = 0; bc < cols; ++bc) {
            const int x0 = bc * block_size;
            const int y0 = br * block_size;
            long best_sad = std::numeric_limits<long>::max();
            int best_mag = 0;
            int best_du = 0;
            int best_dv = 0;
            for (int du = -search_radius; du <= search_radius; ++du) {
                if (x0 + du < 0 || x0 + du + block_size > curr.width) {
                    continue;
                }
                for (int dv = -search_radius; dv <= search_radius; ++dv) {
                    if (y0 + dv < 0 || y0 + dv + block_size > curr.height) {
                        continue;
                    }
                    long sad = 0;
                    for (int y = 0; y < block_size && sad <= best_sad; ++y) {
                        const std::uint8_t* a = &prev.pixels[static_cast<std::size_t>(y0 + y) * prev.width + x0];
                        const std::uint8_t* b =
                            &curr.pixels[static_cast<std::size_t>(y0 + y + dv) * curr.width + x0 + du];
                        for (int x = 0; x < block_size; ++x) {
                            sad += std::abs(static_cast<int>(a[x]) - static_cast<int>(b[x]));
                        }
                    }
                    const int mag = du * du + dv * dv;
                    const bool better = sad < best_sad ||
                                        (sad == best_sad && (mag < best_mag ||
                                                             (mag == best_mag && std::pair{du, dv} <
                                                                                     std::pair{best_du, best_dv})));
                    if (better) {
                        best_sad = sad;
                        best_mag = mag;
                        best_du = du;
                        best_dv = dv;
                    }
                }
            }
            const auto i = static_cast<std::size_t>(br) * cols + bc;
            flow.u[i] = static_cast<float>(best_du);
            flow.v[i] = static_cast<float>(best_dv);
        }
    }
    return flow;
}

FlowVector mean_flow_in_window(const FlowField& flow, const BBox& window)
{
    double su = 0.0;
    double sv = 0.0;
    int n = 0;
    const int bs = flow.block_size;
    // Block centers bs*c + bs/2 inside [x, x+w).
    const int c0 = std::max(0, static_cast<int>(std::ceil((window.x - bs / 2.0) / bs)));
    const int c1 = std::min(flow.cols - 1, static_cast<int>(std::ceil((window.x + window.w - bs / 2.0) / bs)) - 1);
    const int r0 = std::max(0, static_cast<int>(std::ceil((window.y - bs / 2.0) / bs)));
    const int r1 = std::min(flow.rows - 1, static_cast<int>(std::ceil((window.y + window.h - bs / 2.0) / bs)) - 1);
    for (int r = r0; r <= r1; ++r) {
        for (int c = c0; c <= c1; ++c) {
            su += flow.u_at(r, c);
            sv += flow.v_at(r, c);
            ++n;
        }
    }
    if (n == 0) {
        return {};
    }
    return {su / n, sv / n};
}

FlowField zero_flow(int width, int height, int block_size)
{
    return FlowField(std::max(1, height / block_size), std::max(1, width / block_size), block_size);
}

FlowField resample_flow(const FlowField& flow, double scale, int pad_x, int pad_y, int out_width, int out_height)
{
    FlowField out(out_height, out_width, 1);
    for (int y = 0; y < out_height; ++y) {
        const double oy = (y - pad_y + 0.5) / scale;
        const int r = clampi(static_cast<int>(std::floor(oy / flow.block_size)), 0, flow.rows - 1);
        for (int x = 0; x < out_width; ++x) {
            const double ox = (x - pad_x + 0.5) / scale;
            const int c = clampi(static_cast<int>(std::floor(ox / flow.block_size)), 0, flow.cols - 1);
            const auto i = static_cast<std::size_t>(y) * out_width + x;
            out.u[i] = static_cast<float>(flow.u_at(r, c) * scale);
            out.v[i] = static_cast<float>(flow.v_at(r, c) * scale);
        }
    }
    return out;
}

Frame resample_bilinear(const Frame& frame, int out_width, int out_height)
{
    frame.validate();
    if (out_width == frame.width && out_height == frame.height) {
        return frame;
    }
    Frame out(frame.index, out_width, out_height);
    const double sx = static_cast<double>(frame.width) / out_width;
    const double sy = static_cast<double>(frame.height) / out_height;
    std::vector<int> x0s(static_cast<std::size_t>(out_width));
    std::vector<int> x1s(static_cast<std::size_t>(out_width));
    std::vector<double> fxs(static_cast<std::size_t>(out_width));
    for (int x = 0; x < out_width; ++x) {
        const double src = std::clamp((x + 0.5) * sx - 0.5, 0.0, frame.width - 1.0);
        const int x0 = static_cast<int>(std::floor(src));
        x0s[static_cast<std::size_t>(x)] = x0;
        x1s[static_cast<std::size_t>(x)] = std::min(x0 + 1, frame.width - 1);
        fxs[static_cast<std::size_t>(x)] = src - x0;
    }
    for (int y = 0; y < out_height; ++y) {
        const double src = std::clamp((y + 0.5) * sy - 0.5, 0.0, frame.height - 1.0);
        const int y0 = static_cast<int>(std::floor(src));
        const int y1 = std::min(y0 + 1, frame.height - 1);
        const double fy = src - y0;
        for (int x = 0; x < out_width; ++x) {
            const auto xi = static_cast<std::size_t>(x);
            const double top = frame.at(x0s[xi], y0) * (1.0 - fxs[xi]) + frame.at(x1s[xi], y0) * fxs[xi];
            const double bot = frame.at(x0s[xi], y1) * (1.0 - fxs[xi]) + frame.at(x1s[xi], y1) * fxs[xi];
            const double v = top * (1.0 - fy) + bot * fy;
            out.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
        }
    }
    return out;
}

Frame mirror_pad(const Frame& frame, int pad_x, int pad_y)
{
    frame.validate();
    const auto reflect = [](int i, int n) {
        // symmetric: -1 -> 0, n -> n-1
        const int period = 2 * n;
        i %= period;
        if (i < 0) {
            i += period;
        }
        return i < n ? i : period - 1 - i;
    };
    Frame out(frame.index, frame.width + 2 * pad_x, frame.height + 2 * pad_y);
    for (int y = 0; y < out.height; ++y) {
        const int sy = reflect(y - pad_y, frame.height);
        for (int x = 0; x < out.width; ++x) {
            out.at(x, y) = frame.at(reflect(x - pad_x, frame.width), sy);
        }
    }
    return out;
}

int uniform_lbp_bin(const Frame& frame, int x, int y)
{
    static constexpr std::array<std::pair<int, int>, 8> offsets = {
        {{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}}};
    const int w = frame.width;
    const int h = frame.height;
    const int center = frame.at(x, y);
    int code = 0;
    for (std::size_t k = 0; k < offsets.size(); ++k) {
        const int nx = clampi(x + offsets[k].first, 0, w - 1);
        const int ny = clampi(y + offsets[k].second, 0, h - 1);
        if (frame.at(nx, ny) >= center) {
            code |= 1 << k;
        }
    }
    return uniform_table()[static_cast<std::size_t>(code)];
}

}  // namespace sslped
