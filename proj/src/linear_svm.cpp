#include "sslped/linear_svm.hpp"

#include "sslped/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <random>
#include <tuple>

namespace sslped {

namespace {

double dot(std::span<const double> w, std::span<const float> x)
{
    double acc = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        acc += w[k] * static_cast<double>(x[k]);
    }
    return acc;
}

// Unbiased enough for shuffling and reproducible across standard libraries.
std::size_t bounded(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

}  // namespace

void TrainSet::add(Descriptor d, int label, Provenance where)
{
    samples.push_back(std::move(d));
    labels.push_back(label);
    provenance.push_back(where);
}

void TrainSet::append(const TrainSet& other)
{
    samples.insert(samples.end(), other.samples.begin(), other.samples.end());
    labels.insert(labels.end(), other.labels.begin(), other.labels.end());
    provenance.insert(provenance.end(), other.provenance.begin(), other.provenance.end());
}

std::size_t TrainSet::count(int label) const
{
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

void TrainSet::validate() const
{
    if (samples.size() != labels.size()) {
        throw DataError("train set labels and samples differ in count");
    }
    if (count(1) == 0 || count(-1) == 0) {
        throw NumericError("train set needs samples of both labels");
    }
    const auto dim = dimension();
    if (dim == 0) {
        throw DataError("empty descriptors in train set");
    }
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (labels[i] != 1 && labels[i] != -1) {
            throw DataError("labels must be +1 or -1");
        }
        if (samples[i].values.size() != dim || samples[i].layout_id != samples.front().layout_id) {
            throw DataError("train set descriptors differ in layout");
        }
        for (float v : samples[i].values) {
            if (!std::isfinite(v)) {
                throw NumericError("non-finite descriptor value in train set");
            }
        }
    }
}

double objective(std::span<const double> weights, double bias, const TrainSet& set, double lambda)
{
    double reg = bias * bias;
    for (double w : weights) {
        reg += w * w;
    }
    double loss = 0.0;
    for (std::size_t i = 0; i < set.size(); ++i) {
        const double margin = set.labels[i] * (dot(weights, set.samples[i].values) + bias);
        loss += std::max(0.0, 1.0 - margin);
    }
    return 0.5 * lambda * reg + loss / static_cast<double>(set.size());
}

void subgradient(std::span<const double> weights, double bias, const TrainSet& set, double lambda,
                 std::vector<double>& grad_w, double& grad_b)
{
    const double inv_n = 1.0 / static_cast<double>(set.size());
    grad_w.assign(weights.begin(), weights.end());
    for (auto& g : grad_w) {
        g *= lambda;
    }
    grad_b = lambda * bias;
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto& x = set.samples[i].values;
        const double y = set.labels[i];
        if (y * (dot(weights, x) + bias) < 1.0) {
            for (std::size_t k = 0; k < x.size(); ++k) {
                grad_w[k] -= inv_n * y * x[k];
            }
            grad_b -= inv_n * y;
        }
    }
}

LinearModel train(const TrainSet& set, const SvmConfig& cfg, std::vector<double>* epoch_objectives)
{
    if (!(cfg.lambda > 0.0) || cfg.epochs < 1) {
        throw UsageError("svm needs lambda > 0 and epochs >= 1");
    }
    set.validate();
    const std::size_t n = set.size();
    const std::size_t dim = set.dimension();
    // w = scale * v; the last entry of v is the bias (constant-one feature).
    std::vector<double> v(dim + 1, 0.0);
    double scale = 1.0;
    double norm2 = 0.0;  // |v|^2
    const double radius2 = 1.0 / cfg.lambda;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(cfg.seed);
    std::uint64_t t = 0;
    if (epoch_objectives != nullptr) {
        epoch_objectives->clear();
    }
    // Iterates of the second half of the epochs are averaged.
    const int average_from = cfg.average ? cfg.epochs / 2 : cfg.epochs;
    std::vector<double> avg(dim + 1, 0.0);
    std::uint64_t averaged = 0;
    const auto current = [&](std::vector<double>& w, double& b) {
        w.resize(dim);
        if (averaged > 0) {
            const double inv = 1.0 / static_cast<double>(averaged);
            for (std::size_t k = 0; k < dim; ++k) {
                w[k] = avg[k] * inv;
            }
            b = avg[dim] * inv;
        } else {
            for (std::size_t k = 0; k < dim; ++k) {
                w[k] = scale * v[k];
            }
            b = scale * v[dim];
        }
    };
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = n; i > 1; --i) {
            std::swap(order[i - 1], order[bounded(rng, i)]);
        }
        for (std::size_t idx : order) {
            ++t;
            const double eta = 1.0 / (cfg.lambda * static_cast<double>(t));
            const auto& x = set.samples[idx].values;
            const double y = set.labels[idx];
            const double vx = dot(v, x) + v[dim];
            const double margin = y * scale * vx;
            const double shrink = 1.0 - eta * cfg.lambda;
            if (shrink <= 0.0) {
                std::fill(v.begin(), v.end(), 0.0);
                scale = 1.0;
                norm2 = 0.0;
            } else {
                scale *= shrink;
            }
            if (margin < 1.0) {
                const double c = eta * y / scale;
                double xx = 1.0;
                for (std::size_t k = 0; k < dim; ++k) {
                    const double xk = x[k];
                    v[k] += c * xk;
                    xx += xk * xk;
                }
                v[dim] += c;
                // vx was computed before any reset; recompute when v was cleared.
                const double vx_now = shrink <= 0.0 ? 0.0 : vx;
                norm2 += 2.0 * c * vx_now + c * c * xx;
            }
            // Projection onto the ball of radius 1/sqrt(lambda).
            const double wnorm2 = scale * scale * norm2;
            if (wnorm2 > radius2) {
                scale *= std::sqrt(radius2 / wnorm2);
            }
            if (scale < 1e-9) {
                for (auto& e : v) {
                    e *= scale;
                }
                norm2 *= scale * scale;
                scale = 1.0;
            }
            if (epoch >= average_from) {
                for (std::size_t k = 0; k <= dim; ++k) {
                    avg[k] += scale * v[k];
                }
                ++averaged;
            }
        }
        if (epoch_objectives != nullptr) {
            std::vector<double> w;
            double b = 0.0;
            current(w, b);
            epoch_objectives->push_back(objective(w, b, set, cfg.lambda));
        }
    }
    LinearModel model;
    current(model.weights, model.bias);
    model.layout_id = set.samples.front().layout_id;
    for (double w : model.weights) {
        if (!std::isfinite(w)) {
            throw NumericError("svm training diverged");
        }
    }
    return model;
}

double score(const LinearModel& model, std::span<const float> values)
{
    if (values.size() != model.weights.size()) {
        throw DataError("descriptor length does not match the model");
    }
    return dot(model.weights, values) + model.bias;
}

double score(const LinearModel& model, const Descriptor& d)
{
    if (d.layout_id != model.layout_id) {
        throw DataError("descriptor layout does not match the model layout");
    }
    return score(model, std::span<const float>(d.values));
}

bool overlaps_annotation(const BBox& box, const std::vector<Annotation>& annotations, double max_iou)
{
    return std::any_of(annotations.begin(), annotations.end(),
                       [&](const Annotation& a) { return iou(box, a.bbox) >= max_iou; });
}

std::vector<WindowMatch> positive_windows(const std::vector<LevelGeometry>& levels,
                                          const std::vector<Annotation>& annotations, const ChannelConfig& channels,
                                          double min_iou)
{
    std::vector<WindowMatch> out;
    for (const auto& a : annotations) {
        if (a.label != Label::pedestrian || a.occluded) {
            continue;
        }
        auto m = best_window(levels, a.bbox, channels);
        if (m.iou >= min_iou) {
            out.push_back(m);
        }
    }
    return out;
}

namespace {

struct Mined {
    double score;
    int frame;
    WindowRef window;
    BBox box;
    Descriptor descriptor;
};

// Heap order: the worst retained entry on top (lowest score, then latest position).
struct WorseFirst {
    bool operator()(const Mined& a, const Mined& b) const
    {
        return std::tuple(-a.score, a.frame, a.window.level, a.window.gy, a.window.gx) <
               std::tuple(-b.score, b.frame, b.window.level, b.window.gy, b.window.gx);
    }
};

FrameFeatures features_of(const ImageSequence& seq, int f, const ScanConfig& scan,
                          const std::vector<FlowField>* flows)
{
    const FlowField* flow = flows != nullptr ? &(*flows)[static_cast<std::size_t>(f)] : nullptr;
    return compute_frame_features(seq.frames[static_cast<std::size_t>(f)], scan, flow);
}

}  // namespace

BootstrapResult bootstrap_train(const ImageSequence& seq, const std::vector<int>& frames_in, const ScanConfig& scan,
                                const SvmConfig& svm, const BootstrapConfig& cfg, const std::vector<FlowField>* flows)
{
    scan.validate();
    if (seq.frames.empty()) {
        throw DataError("bootstrap training needs frames");
    }
    std::vector<int> frames = frames_in;
    if (frames.empty()) {
        frames.resize(seq.frames.size());
        std::iota(frames.begin(), frames.end(), 0);
    }
    std::vector<FlowField> own_flows;
    if (scan.channels.flow_hist && flows == nullptr) {
        own_flows = compute_sequence_flows(seq, scan.flow_block, scan.flow_radius);
        flows = &own_flows;
    }
    if (!scan.channels.flow_hist) {
        flows = nullptr;
    }
    const auto by_frame = seq.annotations_by_frame();
    const auto& channels = scan.channels;
    std::mt19937_64 rng(cfg.seed);

    TrainSet set;
    BootstrapResult result;
    for (int f : frames) {
        const auto features = features_of(seq, f, scan, flows);
        const auto& anns = by_frame[static_cast<std::size_t>(f)];
        for (const auto& m : positive_windows(features.levels, anns, channels, cfg.pos_min_iou)) {
            set.add(window_descriptor(features, m.window), 1, {f, m.box});
            ++result.positives;
        }
        const std::size_t total = features.window_count();
        for (int k = 0; k < cfg.neg_per_frame; ++k) {
            for (int attempt = 0; attempt < 50; ++attempt) {
                std::size_t pick = bounded(rng, total);
                WindowRef ref;
                for (std::size_t l = 0; l < features.levels.size(); ++l) {
                    const auto& g = features.levels[l];
                    const auto count = static_cast<std::size_t>(g.rows) * g.cols;
                    if (pick < count) {
                        ref = {static_cast<int>(l), static_cast<int>(pick % g.cols), static_cast<int>(pick / g.cols)};
                        break;
                    }
                    pick -= count;
                }
                const auto box = window_box(features.levels[static_cast<std::size_t>(ref.level)], ref.gx, ref.gy, channels);
                if (!overlaps_annotation(box, anns, cfg.neg_max_iou)) {
                    set.add(window_descriptor(features, ref), -1, {f, box});
                    ++result.initial_negatives;
                    break;
                }
            }
        }
    }
    if (result.positives == 0) {
        throw DataError("no positive windows in the training frames");
    }
    LinearModel current = train(set, svm);
    current.kind = ModelKind::base;
    current.channels = channels;
    result.round_models.push_back(current);
    result.mined_per_round.push_back(0);

    for (int round = 1; round <= cfg.rounds; ++round) {
        std::priority_queue<Mined, std::vector<Mined>, WorseFirst> heap;
        if (cfg.max_mined > 0) {
            for (int f : frames) {
                const auto features = features_of(seq, f, scan, flows);
                const auto& anns = by_frame[static_cast<std::size_t>(f)];
                const auto scores = score_frame(features, current);
                for (std::size_t l = 0; l < scores.maps.size(); ++l) {
                    const auto& map = scores.maps[l];
                    for (int gy = 0; gy < map.rows; ++gy) {
                        for (int gx = 0; gx < map.cols; ++gx) {
                            const double s = map.at(gy, gx);
                            if (!(s > cfg.mining_threshold)) {
                                continue;
                            }
                            if (heap.size() == cfg.max_mined && !(s > heap.top().score)) {
                                continue;
                            }
                            const WindowRef ref{static_cast<int>(l), gx, gy};
                            const auto box = window_box(features.levels[l], gx, gy, channels);
                            if (overlaps_annotation(box, anns, cfg.neg_max_iou)) {
                                continue;
                            }
                            heap.push({s, f, ref, box, window_descriptor(features, ref)});
                            if (heap.size() > cfg.max_mined) {
                                heap.pop();
                            }
                        }
                    }
                }
            }
        }
        std::vector<Mined> mined;
        while (!heap.empty()) {
            mined.push_back(heap.top());
            heap.pop();
        }
        std::reverse(mined.begin(), mined.end());
        result.mined_per_round.push_back(mined.size());
        if (!mined.empty()) {
            for (auto& m : mined) {
                result.mined_negatives.push_back({m.frame, m.box});
                set.add(std::move(m.descriptor), -1, {m.frame, m.box});
            }
            current = train(set, svm);
            current.kind = ModelKind::base;
            current.channels = channels;
        }
        result.round_models.push_back(current);
    }
    result.model = current;
    return result;
}

}  // namespace sslped
