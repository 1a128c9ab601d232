#pragma once

#include "sslped/detector.hpp"
#include "sslped/sequence_io.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace sslped {

enum class Subset { near, medium, reasonable };

std::string_view to_string(Subset subset);
Subset parse_subset(std::string_view text);

struct EvalConfig {
    double iou_match = 0.5;
    Subset subset = Subset::reasonable;
    double fppi_min = 1e-2;
    double fppi_max = 1.0;
    int fppi_samples = 9;
    double height_margin = 0.25;  // detections outside the band by more than this are dropped

    void validate() const;
};

/// Height band [min_h, max_h) of a subset in pixels.
struct HeightBand {
    double min_h = 0.0;
    double max_h = 0.0;
};
HeightBand height_band(Subset subset);

/// Pedestrians inside the band that are not occluded keep their label; all
/// other annotations become ignore regions.
std::vector<Annotation> select_subset(const std::vector<Annotation>& annotations, Subset subset);

enum class MatchOutcome { true_positive, false_positive, ignored };

struct FrameMatch {
    int tp = 0;
    int fp = 0;
    int fn = 0;
    /// Outcome per detection, indexed like the input.
    std::vector<MatchOutcome> outcomes;
};

/// Greedy matching in descending score order to the unmatched ground truth
/// of highest IoU; unmatched detections on ignore regions are discarded.
FrameMatch match_frame(const std::vector<Detection>& detections, const std::vector<BBox>& ground_truth,
                       const std::vector<BBox>& ignores, double iou_threshold);

struct CurvePoint {
    double threshold = 0.0;
    double fppi = 0.0;
    double miss_rate = 1.0;
    int tp = 0;
    int fp = 0;
    int fn = 0;
};

/// FPPI / miss-rate points, one per distinct detection score, thresholds
/// descending. Throws DataError when the subset holds no ground truth.
std::vector<CurvePoint> curve(const std::vector<Detection>& detections,
                              const std::vector<Annotation>& annotations, int frame_count,
                              const EvalConfig& cfg);

/// Mean miss rate over log-spaced FPPI samples, in percent.
double log_average_miss_rate(const std::vector<CurvePoint>& points, const EvalConfig& cfg);

struct EvalResult {
    std::vector<CurvePoint> points;
    double lamr = 100.0;
    int ground_truth = 0;
};

EvalResult evaluate(const std::vector<Detection>& detections, const std::vector<Annotation>& annotations,
                    int frame_count, const EvalConfig& cfg);

void write_curve_csv(const std::filesystem::path& path, const std::vector<CurvePoint>& points);
std::vector<CurvePoint> read_curve_csv(const std::filesystem::path& path);

struct NamedCurve {
    std::string name;
    std::vector<CurvePoint> points;
};

/// Miss rate against FPPI on a log-x axis.
std::string render_svg(const std::vector<NamedCurve>& curves, const EvalConfig& cfg);

}  // namespace sslped
