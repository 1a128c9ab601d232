#pragma once

#include "sslped/features.hpp"
#include "sslped/model.hpp"
#include "sslped/pyramid.hpp"
#include "sslped/sequence_io.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace sslped {

struct Provenance {
    int frame_index = -1;
    BBox bbox;
};

/// Labelled descriptors (+1 / -1) for one training run.
struct TrainSet {
    std::vector<Descriptor> samples;
    std::vector<int> labels;
    std::vector<Provenance> provenance;

    void add(Descriptor d, int label, Provenance where = {});
    void append(const TrainSet& other);
    [[nodiscard]] std::size_t size() const { return samples.size(); }
    [[nodiscard]] std::size_t dimension() const { return samples.empty() ? 0 : samples.front().values.size(); }
    [[nodiscard]] std::size_t count(int label) const;

    /// Throws NumericError for single-class or non-finite sets, DataError for
    /// ragged descriptors.
    void validate() const;
};

struct SvmConfig {
    double lambda = 1e-4;
    int epochs = 30;
    std::uint64_t seed = 1;
    bool average = true;  // return the mean iterate of the second half of the epochs
};

/// Pegasos-style stochastic subgradient descent on
///   lambda/2 (|w|^2 + b^2) + mean_i max(0, 1 - y_i (w.x_i + b)).
/// The bias is an extra constant-one feature. With cfg.average the model
/// is the mean iterate of the second half of the epochs. `epoch_objectives`,
/// when given, receives the objective of the would-be model after every epoch.
LinearModel train(const TrainSet& set, const SvmConfig& cfg,
                  std::vector<double>* epoch_objectives = nullptr);

/// The objective minimized by train().
double objective(std::span<const double> weights, double bias, const TrainSet& set, double lambda);

/// Subgradient of objective() (margin points take the zero branch).
void subgradient(std::span<const double> weights, double bias, const TrainSet& set, double lambda,
                 std::vector<double>& grad_w, double& grad_b);

/// w.d + b; throws DataError on layout mismatch.
double score(const LinearModel& model, const Descriptor& d);
double score(const LinearModel& model, std::span<const float> values);

struct BootstrapConfig {
    int rounds = 3;
    int neg_per_frame = 10;
    std::size_t max_mined = 4000;
    double mining_threshold = -1.0;
    double neg_max_iou = 0.3;   // negatives stay below this overlap with any annotation
    double pos_min_iou = 0.5;   // grid window accepted as a positive
    std::uint64_t seed = 7;
};

struct BootstrapResult {
    LinearModel model;
    std::vector<LinearModel> round_models;  // round 0 first
    std::vector<std::size_t> mined_per_round;  // entry 0 (round 0) is always 0
    std::vector<Provenance> mined_negatives;
    std::size_t positives = 0;
    std::size_t initial_negatives = 0;
};

/// Hard-negative bootstrapping over the given frames of `seq` (all frames
/// when `frames` is empty). `flows` is needed when the channels use flow.
BootstrapResult bootstrap_train(const ImageSequence& seq, const std::vector<int>& frames,
                                const ScanConfig& scan, const SvmConfig& svm,
                                const BootstrapConfig& cfg,
                                const std::vector<FlowField>* flows = nullptr);

/// Positive windows of a frame: the best grid window per pedestrian
/// annotation that reaches `min_iou`.
std::vector<WindowMatch> positive_windows(const std::vector<LevelGeometry>& levels,
                                          const std::vector<Annotation>& annotations,
                                          const ChannelConfig& channels, double min_iou);

/// True when the box overlaps any annotation with IoU >= max_iou.
bool overlaps_annotation(const BBox& box, const std::vector<Annotation>& annotations, double max_iou);

}  // namespace sslped
