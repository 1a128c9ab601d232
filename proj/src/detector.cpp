#include "sslped/detector.hpp"

#include "sslped/errors.hpp"
#include "sslped/linear_svm.hpp"
#include "sslped/ssl_core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

namespace sslped {

namespace {

bool ranks_before(const Detection& a, const Detection& b)
{
    return std::tuple(-a.score, a.bbox.x, a.bbox.y, a.bbox.w, a.bbox.h) <
           std::tuple(-b.score, b.bbox.x, b.bbox.y, b.bbox.w, b.bbox.h);
}

void check_base(const LinearModel& base, const ScanConfig& scan)
{
    if (base.kind != ModelKind::base) {
        throw DataError("stage 1 needs a base model");
    }
    if (!(base.channels == scan.channels) || base.layout_id != scan.channels.layout_id() ||
        base.weights.size() != scan.channels.descriptor_length()) {
        throw DataError("base model layout does not match the channel configuration");
    }
}

void check_ssl(const LinearModel& ssl)
{
    if (ssl.kind != ModelKind::ssl) {
        throw DataError("stage 2 needs an ssl model");
    }
    ssl.neighborhood.validate();
    if (ssl.layout_id != ssl_layout_id(ssl.channels, ssl.neighborhood) ||
        ssl.weights.size() != expected_length(ModelKind::ssl, ssl.channels, ssl.neighborhood)) {
        throw DataError("ssl model layout is inconsistent");
    }
}

}  // namespace

void sort_by_score(std::vector<Detection>& detections)
{
    std::sort(detections.begin(), detections.end(), ranks_before);
}

std::vector<Detection> nms(std::vector<Detection> detections, double iou_threshold)
{
    sort_by_score(detections);
    std::vector<Detection> kept;
    for (const auto& d : detections) {
        const bool clear = std::all_of(kept.begin(), kept.end(),
                                       [&](const Detection& k) { return iou(k.bbox, d.bbox) < iou_threshold; });
        if (clear) {
            kept.push_back(d);
        }
    }
    return kept;
}

Stage1Result stage1_scan(const FrameFeatures& features, const LinearModel& base, const DetectorConfig& cfg)
{
    if (features.channels.empty()) {
        throw DataError("no pyramid levels to scan");
    }
    const auto& channels = features.channels.front().config;
    if (base.layout_id != channels.layout_id()) {
        throw DataError("base model layout does not match the channel layout");
    }
    Stage1Result out;
    out.scores = score_frame(features, base);
    for (std::size_t l = 0; l < out.scores.maps.size(); ++l) {
        const auto& map = out.scores.maps[l];
        const auto& g = features.levels[l];
        out.scored_windows += map.scores.size();
        for (int gy = 0; gy < map.rows; ++gy) {
            for (int gx = 0; gx < map.cols; ++gx) {
                const double s = map.at(gy, gx);
                if (s >= cfg.stage1_threshold) {
                    const WindowRef ref{static_cast<int>(l), gx, gy};
                    Candidate c;
                    c.detection = {features.frame_index, window_box(g, gx, gy, channels), s, Stage::stage1};
                    c.window = ref;
                    c.descriptor = window_descriptor(features, ref);
                    out.candidates.push_back(std::move(c));
                }
            }
        }
    }
    return out;
}

std::vector<Detection> stage2_ssl(const std::vector<Candidate>& candidates, const LinearModel& ssl,
                                  const ScoreMapStore& store, FrameRange range, const FlowLookup& flows,
                                  const DetectorConfig& cfg)
{
    check_ssl(ssl);
    const auto& spec = ssl.neighborhood;
    const std::size_t dlen = ssl.channels.descriptor_length();
    const auto base_layout = ssl.channels.layout_id();
    std::vector<Detection> out;
    for (const auto& c : candidates) {
        if (c.descriptor.layout_id != base_layout || c.descriptor.values.size() != dlen) {
            throw DataError("candidate descriptor does not match the ssl model");
        }
        const auto track = build_track(c.detection.bbox, c.detection.frame_index, spec, range, flows);
        const auto neighbors = gather_neighbor_scores(track, spec, store, c.window.level, cfg.out_of_grid());
        double s = ssl.bias;
        for (std::size_t k = 0; k < dlen; ++k) {
            s += ssl.weights[k] * static_cast<double>(c.descriptor.values[k]);
        }
        for (std::size_t k = 0; k < neighbors.size(); ++k) {
            // Same float rounding as the stored training vectors.
            s += ssl.weights[dlen + k] * static_cast<double>(static_cast<float>(neighbors[k]));
        }
        if (s >= cfg.stage2_threshold) {
            Detection d = c.detection;
            d.score = s;
            d.stage = Stage::final;
            out.push_back(d);
        }
    }
    return out;
}

std::vector<Detection> detect_sequence(const ImageSequence& seq, const LinearModel& base, const LinearModel* ssl,
                                       const ScanConfig& scan, const DetectorConfig& cfg, DetectionStats* stats)
{
    scan.validate();
    check_base(base, scan);
    if (seq.frames.empty()) {
        throw DataError("sequence has no frames");
    }
    const bool use_ssl = ssl != nullptr && !cfg.ssl_disabled;
    if (use_ssl) {
        check_ssl(*ssl);
        if (!(ssl->channels == base.channels)) {
            throw DataError("ssl and base models use different channel layouts");
        }
    }
    const NeighborhoodSpec spec = use_ssl ? ssl->neighborhood : NeighborhoodSpec{};
    const bool need_flow = scan.channels.flow_hist || (use_ssl && spec.mode == VolumeMode::optical_flow);
    const int lookahead = use_ssl ? spec.frames_after() : 0;
    const int retain = use_ssl ? spec.T : 1;

    DetectionStats local;
    ScoreMapStore store(static_cast<std::size_t>(retain));
    std::map<int, FlowField> flow_ring;
    const FlowLookup lookup = [&](int frame) -> const FlowField* {
        const auto it = flow_ring.find(frame);
        return it == flow_ring.end() ? nullptr : &it->second;
    };
    const FrameRange range{0, seq.size() - 1};
    std::deque<std::pair<int, std::vector<Candidate>>> pending;
    std::vector<Detection> out;

    const auto finish = [&](const std::vector<Candidate>& candidates) {
        auto survivors = stage2_ssl(candidates, *ssl, store, range, lookup, cfg);
        for (auto& d : nms(std::move(survivors), cfg.nms_iou)) {
            out.push_back(d);
            ++local.final_detections;
        }
    };

    for (int f = 0; f < seq.size(); ++f) {
        const auto& frame = seq.frames[static_cast<std::size_t>(f)];
        const FlowField* frame_flow = nullptr;
        if (need_flow) {
            flow_ring[f] = f == 0 ? zero_flow(frame.width, frame.height, scan.flow_block)
                                  : compute_flow(seq.frames[static_cast<std::size_t>(f - 1)], frame, scan.flow_block,
                                                 scan.flow_radius);
            while (!flow_ring.empty() && flow_ring.begin()->first < f - retain) {
                flow_ring.erase(flow_ring.begin());
            }
            frame_flow = &flow_ring[f];
        }
        const auto features = compute_frame_features(frame, scan, scan.channels.flow_hist ? frame_flow : nullptr);
        auto s1 = stage1_scan(features, base, cfg);
        ++local.frames;
        local.scored_windows += s1.scored_windows;
        local.stage1_candidates += s1.candidates.size();
        if (!use_ssl) {
            std::vector<Detection> dets;
            dets.reserve(s1.candidates.size());
            for (const auto& c : s1.candidates) {
                Detection d = c.detection;
                d.stage = Stage::final;
                dets.push_back(d);
            }
            for (auto& d : nms(std::move(dets), cfg.nms_iou)) {
                out.push_back(d);
                ++local.final_detections;
            }
            continue;
        }
        store.put(std::move(s1.scores));
        local.max_store_frames = std::max(local.max_store_frames, store.size());
        pending.emplace_back(f, std::move(s1.candidates));
        while (!pending.empty() && pending.front().first + lookahead <= f) {
            finish(pending.front().second);
            pending.pop_front();
        }
    }
    while (!pending.empty()) {
        finish(pending.front().second);
        pending.pop_front();
    }
    if (stats != nullptr) {
        *stats = local;
    }
    return out;
}

void write_detections(const std::filesystem::path& path, const std::vector<Detection>& detections)
{
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out << "frame_index,x,y,w,h,score\n";
    char buf[64];
    for (const auto& d : detections) {
        std::snprintf(buf, sizeof(buf), "%.17g", d.score);
        out << d.frame_index << ',' << d.bbox.x << ',' << d.bbox.y << ',' << d.bbox.w << ',' << d.bbox.h << ','
            << buf << '\n';
    }
}

std::vector<Detection> read_detections(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    std::vector<Detection> out;
    std::string line;
    bool header = true;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        if (header) {
            header = false;
            if (line != "frame_index,x,y,w,h,score") {
                throw DataError(path.string() + ": bad detections header");
            }
            continue;
        }
        std::istringstream s(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(s, field, ',')) {
            fields.push_back(field);
        }
        if (fields.size() != 6) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected 6 fields");
        }
        try {
            Detection d;
            d.frame_index = std::stoi(fields[0]);
            d.bbox = {std::stoi(fields[1]), std::stoi(fields[2]), std::stoi(fields[3]), std::stoi(fields[4])};
            d.score = std::stod(fields[5]);
            d.stage = Stage::final;
            if (!std::isfinite(d.score)) {
                throw NumericError("non-finite detection score");
            }
            out.push_back(d);
        } catch (const std::invalid_argument&) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed number");
        } catch (const std::out_of_range&) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": number out of range");
        }
    }
    return out;
}

}  // namespace sslped
