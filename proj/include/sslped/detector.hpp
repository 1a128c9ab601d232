#pragma once

#include "sslped/features.hpp"
#include "sslped/model.hpp"
#include "sslped/neighborhood.hpp"
#include "sslped/pyramid.hpp"
#include "sslped/sequence_io.hpp"

#include <filesystem>
#include <limits>
#include <optional>
#include <vector>

namespace sslped {

enum class Stage { stage1, final };

struct Detection {
    int frame_index = 0;
    BBox bbox;
    double score = 0.0;
    Stage stage = Stage::stage1;

    friend bool operator==(const Detection&, const Detection&) = default;
};

/// Stage-1 survivor with its grid position and descriptor.
struct Candidate {
    Detection detection;
    WindowRef window;
    Descriptor descriptor;
};

struct DetectorConfig {
    double stage1_threshold = -1.0;
    double stage2_threshold = -1.0;
    double nms_iou = 0.5;
    bool ssl_disabled = false;
    /// Fill for neighborhood reads off the score grid; stage-1 threshold when unset.
    std::optional<double> out_of_grid_score;

    [[nodiscard]] double out_of_grid() const { return out_of_grid_score.value_or(stage1_threshold); }
};

struct Stage1Result {
    std::vector<Candidate> candidates;
    FrameScores scores;
    std::size_t scored_windows = 0;
};

/// Scores every grid window of every level; windows at or above the stage-1
/// threshold become candidates. No suppression.
Stage1Result stage1_scan(const FrameFeatures& features, const LinearModel& base,
                         const DetectorConfig& cfg);

/// Re-scores candidates with the SSL model; survivors keep their boxes and
/// take the SSL score.
std::vector<Detection> stage2_ssl(const std::vector<Candidate>& candidates, const LinearModel& ssl,
                                  const ScoreMapStore& store, FrameRange range,
                                  const FlowLookup& flows, const DetectorConfig& cfg);

/// Greedy non-maximum suppression; ties by score, then smaller x, then smaller y.
std::vector<Detection> nms(std::vector<Detection> detections, double iou_threshold);

/// Orders detections by descending score with the NMS tie-break.
void sort_by_score(std::vector<Detection>& detections);

struct DetectionStats {
    std::size_t frames = 0;
    std::size_t scored_windows = 0;
    std::size_t stage1_candidates = 0;
    std::size_t final_detections = 0;
    std::size_t max_store_frames = 0;
};

/// Runs the two-stage pipeline over the sequence in temporal order. With
/// cfg.ssl_disabled (or no SSL model) the output is stage 1 + NMS.
std::vector<Detection> detect_sequence(const ImageSequence& seq, const LinearModel& base,
                                       const LinearModel* ssl, const ScanConfig& scan,
                                       const DetectorConfig& cfg, DetectionStats* stats = nullptr);

// Detections CSV: `frame_index,x,y,w,h,score` with header.
void write_detections(const std::filesystem::path& path, const std::vector<Detection>& detections);
std::vector<Detection> read_detections(const std::filesystem::path& path);

}  // namespace sslped
