#include "sslped/pyramid.hpp"

#include "sslped/errors.hpp"

#include <algorithm>
#include <cmath>

namespace sslped {

void PyramidConfig::validate(const ChannelConfig& channels) const
{
    if (scales_per_octave < 1) {
        throw UsageError("scales_per_octave must be >= 1");
    }
    if (stride <= 0 || stride % channels.cell_size != 0) {
        throw UsageError("stride must be a positive multiple of the cell size");
    }
}

void ScanConfig::validate() const
{
    channels.validate();
    pyramid.validate(channels);
    if (flow_block < 4 || flow_radius < 1) {
        throw UsageError("flow needs block >= 4 and radius >= 1");
    }
}

std::vector<double> pyramid_scales(int width, int height, int window_w, int window_h, const PyramidConfig& cfg)
{
    if (width < window_w || height < window_h) {
        throw DataError("frame smaller than the detection window");
    }
    std::vector<double> scales;
    for (int i = 0;; ++i) {
        const double s = std::exp2(-static_cast<double>(i) / cfg.scales_per_octave);
        if (std::lround(width * s) < window_w || std::lround(height * s) < window_h) {
            break;
        }
        scales.push_back(s);
    }
    return scales;
}

Pyramid build_pyramid(const Frame& frame, int window_w, int window_h, const PyramidConfig& cfg)
{
    frame.validate();
    Pyramid p;
    p.scale_factor = std::exp2(-1.0 / cfg.scales_per_octave);
    for (double s : pyramid_scales(frame.width, frame.height, window_w, window_h, cfg)) {
        const int w = static_cast<int>(std::lround(frame.width * s));
        const int h = static_cast<int>(std::lround(frame.height * s));
        p.levels.push_back({s, resample_bilinear(frame, w, h)});
    }
    return p;
}

namespace {

LevelGeometry make_geometry(int width, int height, double s, const ScanConfig& cfg)
{
    const auto& ch = cfg.channels;
    LevelGeometry g;
    g.scale = s;
    g.pad_x = ch.window_w / 2;
    g.pad_y = ch.window_h / 2;
    g.stride = cfg.pyramid.stride;
    const int pw = static_cast<int>(std::lround(width * s)) + 2 * g.pad_x;
    const int ph = static_cast<int>(std::lround(height * s)) + 2 * g.pad_y;
    g.cols = (pw - ch.window_w) / g.stride + 1;
    g.rows = (ph - ch.window_h) / g.stride + 1;
    return g;
}

}  // namespace

std::vector<LevelGeometry> level_geometries(int width, int height, const ScanConfig& cfg)
{
    std::vector<LevelGeometry> out;
    for (double s : pyramid_scales(width, height, cfg.channels.window_w, cfg.channels.window_h, cfg.pyramid)) {
        out.push_back(make_geometry(width, height, s, cfg));
    }
    return out;
}

BBox window_box(const LevelGeometry& level, int gx, int gy, const ChannelConfig& channels)
{
    const double s = level.scale;
    return {static_cast<int>(std::lround((gx * level.stride - level.pad_x) / s)),
            static_cast<int>(std::lround((gy * level.stride - level.pad_y) / s)),
            static_cast<int>(std::lround(channels.window_w / s)),
            static_cast<int>(std::lround(channels.window_h / s))};
}

int nearest_grid_x(const LevelGeometry& level, double x)
{
    return static_cast<int>(std::lround((x * level.scale + level.pad_x) / level.stride));
}

int nearest_grid_y(const LevelGeometry& level, double y)
{
    return static_cast<int>(std::lround((y * level.scale + level.pad_y) / level.stride));
}

std::size_t FrameFeatures::window_count() const
{
    std::size_t n = 0;
    for (const auto& g : levels) {
        n += static_cast<std::size_t>(g.rows) * g.cols;
    }
    return n;
}

FrameFeatures compute_frame_features(const Frame& frame, const ScanConfig& cfg, const FlowField* flow)
{
    cfg.validate();
    if (cfg.channels.flow_hist && flow == nullptr) {
        throw UsageError("flow_hist channels need the frame's flow field");
    }
    FrameFeatures out;
    out.frame_index = frame.index;
    const auto pyramid = build_pyramid(frame, cfg.channels.window_w, cfg.channels.window_h, cfg.pyramid);
    for (const auto& level : pyramid.levels) {
        auto g = make_geometry(frame.width, frame.height, level.scale, cfg);
        const Frame padded = mirror_pad(level.image, g.pad_x, g.pad_y);
        FeatureChannels ch;
        if (cfg.channels.flow_hist) {
            const auto level_flow = resample_flow(*flow, level.scale, g.pad_x, g.pad_y, padded.width, padded.height);
            ch = compute_channels(padded, cfg.channels, &level_flow);
        } else {
            ch = compute_channels(padded, cfg.channels);
        }
        ch.scale = level.scale;
        ch.frame_index = frame.index;
        out.levels.push_back(g);
        out.channels.push_back(std::move(ch));
    }
    return out;
}

WindowMatch best_window(const std::vector<LevelGeometry>& levels, const BBox& target, const ChannelConfig& channels)
{
    WindowMatch best;
    best.iou = -1.0;
    for (std::size_t l = 0; l < levels.size(); ++l) {
        const auto& g = levels[l];
        const int cx = nearest_grid_x(g, target.x);
        const int cy = nearest_grid_y(g, target.y);
        for (int gy = cy - 1; gy <= cy + 1; ++gy) {
            for (int gx = cx - 1; gx <= cx + 1; ++gx) {
                if (gx < 0 || gy < 0 || gx >= g.cols || gy >= g.rows) {
                    continue;
                }
                const auto box = window_box(g, gx, gy, channels);
                const double o = iou(box, target);
                if (o > best.iou) {
                    best = {{static_cast<int>(l), gx, gy}, box, o};
                }
            }
        }
    }
    if (best.iou < 0.0) {
        best.iou = 0.0;
    }
    return best;
}

Descriptor window_descriptor(const FrameFeatures& features, const WindowRef& window)
{
    const auto& ch = features.channels.at(static_cast<std::size_t>(window.level));
    const auto& g = features.levels.at(static_cast<std::size_t>(window.level));
    if (window.gx < 0 || window.gy < 0 || window.gx >= g.cols || window.gy >= g.rows) {
        throw DataError("window outside the scan grid");
    }
    Descriptor d;
    d.layout_id = ch.config.layout_id();
    d.values.resize(ch.config.descriptor_length());
    const int step = g.stride / ch.cell_size;
    extract_window(ch, window.gx * step, window.gy * step, d.values);
    return d;
}

ScoreMap score_level(const FeatureChannels& channels, const LevelGeometry& level, const LinearModel& model)
{
    const auto len = channels.config.descriptor_length();
    if (model.layout_id != channels.config.layout_id() || model.weights.size() != len) {
        throw DataError("model layout does not match the channel layout");
    }
    ScoreMap map;
    map.rows = level.rows;
    map.cols = level.cols;
    map.scores.resize(static_cast<std::size_t>(map.rows) * map.cols);
    const int step = level.stride / channels.cell_size;
    for (int gy = 0; gy < map.rows; ++gy) {
        for (int gx = 0; gx < map.cols; ++gx) {
            map.scores[static_cast<std::size_t>(gy) * map.cols + gx] =
                window_dot(channels, gx * step, gy * step, model.weights) + model.bias;
        }
    }
    return map;
}

FrameScores score_frame(const FrameFeatures& features, const LinearModel& model)
{
    FrameScores out;
    out.frame_index = features.frame_index;
    out.levels = features.levels;
    for (std::size_t l = 0; l < features.levels.size(); ++l) {
        out.maps.push_back(score_level(features.channels[l], features.levels[l], model));
    }
    return out;
}

void ScoreMapStore::put(FrameScores scores)
{
    const auto it = std::lower_bound(frames_.begin(), frames_.end(), scores.frame_index,
                                     [](const FrameScores& f, int idx) { return f.frame_index < idx; });
    if (it != frames_.end() && it->frame_index == scores.frame_index) {
        *it = std::move(scores);
    } else {
        frames_.insert(it, std::move(scores));
    }
    while (capacity_ > 0 && frames_.size() > capacity_) {
        frames_.pop_front();
    }
}

const FrameScores* ScoreMapStore::find(int frame_index) const
{
    const auto it = std::lower_bound(frames_.begin(), frames_.end(), frame_index,
                                     [](const FrameScores& f, int idx) { return f.frame_index < idx; });
    if (it == frames_.end() || it->frame_index != frame_index) {
        return nullptr;
    }
    return &*it;
}

std::vector<FlowField> compute_sequence_flows(const ImageSequence& seq, int block_size, int search_radius)
{
    std::vector<FlowField> flows;
    flows.reserve(seq.frames.size());
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
        if (i == 0) {
            flows.push_back(zero_flow(seq.frames[0].width, seq.frames[0].height, block_size));
        } else {
            flows.push_back(compute_flow(seq.frames[i - 1], seq.frames[i], block_size, search_radius));
        }
    }
    return flows;
}

}  // namespace sslped
