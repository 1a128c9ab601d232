#include "sslped/ssl_training.hpp"

#include "sslped/errors.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <queue>
#include <random>
#include <tuple>

namespace sslped {

namespace {

struct PendingSample {
    int frame;
    int fold;
    WindowRef window;
    BBox box;
    Descriptor descriptor;
    int label;
};

struct MinedSample {
    double score;
    int frame;
    WindowRef window;
    int fold;
    BBox box;
};

struct WorseFirst {
    bool operator()(const MinedSample& a, const MinedSample& b) const
    {
        return std::tuple(-a.score, a.frame, a.window.level, a.window.gy, a.window.gx) <
               std::tuple(-b.score, b.frame, b.window.level, b.window.gy, b.window.gx);
    }
};

}  // namespace

LinearModel train_ssl_classifier(const ImageSequence& seq, const SslTrainConfig& cfg, const FoldPlan& plan,
                                 const std::vector<LinearModel>& fold_models, const std::vector<FlowField>* flows,
                                 std::size_t* positives_out, std::size_t* negatives_out)
{
    const auto& scan = cfg.scan;
    const auto& spec = cfg.neighborhood;
    const auto& channels = scan.channels;
    const auto& boot = cfg.ssl_bootstrap;
    spec.validate();
    if (static_cast<int>(fold_models.size()) != plan.K) {
        throw UsageError("need one auxiliary model per fold");
    }
    const bool need_flow = channels.flow_hist || spec.mode == VolumeMode::optical_flow;
    std::vector<FlowField> own_flows;
    if (need_flow && flows == nullptr) {
        own_flows = compute_sequence_flows(seq, scan.flow_block, scan.flow_radius);
        flows = &own_flows;
    }
    const FlowLookup lookup = [&](int frame) -> const FlowField* {
        if (flows == nullptr || frame < 0 || frame >= static_cast<int>(flows->size())) {
            return nullptr;
        }
        return &(*flows)[static_cast<std::size_t>(frame)];
    };
    const auto features_of = [&](int f) {
        const FlowField* flow = channels.flow_hist ? lookup(f) : nullptr;
        return compute_frame_features(seq.frames[static_cast<std::size_t>(f)], scan, flow);
    };
    const auto by_frame = seq.annotations_by_frame();
    const auto ssl_layout = ssl_layout_id(channels, spec);
    const double fill = cfg.detector.out_of_grid();
    const double stage1 = cfg.detector.stage1_threshold;
    std::mt19937_64 rng(boot.seed);

    // Score every fold's frames with its auxiliary classifier and keep the
    // positives plus a random draw of negative windows. Later rounds mine
    // among stage-1 candidates only.
    std::vector<ScoreMapStore> stores(static_cast<std::size_t>(plan.K));
    std::vector<PendingSample> pending;
    for (int k = 0; k < plan.K; ++k) {
        for (int f : plan.frames_in(k)) {
            const auto features = features_of(f);
            auto scores = score_frame(features, fold_models[static_cast<std::size_t>(k)]);
            const auto& anns = by_frame[static_cast<std::size_t>(f)];
            for (const auto& m : positive_windows(features.levels, anns, channels, boot.pos_min_iou)) {
                pending.push_back({f, k, m.window, m.box, window_descriptor(features, m.window), 1});
            }
            std::vector<std::pair<WindowRef, BBox>> negatives;
            for (std::size_t l = 0; l < scores.maps.size(); ++l) {
                const auto& map = scores.maps[l];
                for (int gy = 0; gy < map.rows; ++gy) {
                    for (int gx = 0; gx < map.cols; ++gx) {
                        const auto box = window_box(features.levels[l], gx, gy, channels);
                        if (!overlaps_annotation(box, anns, boot.neg_max_iou)) {
                            negatives.push_back({{static_cast<int>(l), gx, gy}, box});
                        }
                    }
                }
            }
            for (int n = 0; n < boot.neg_per_frame && !negatives.empty(); ++n) {
                const auto pick = static_cast<std::size_t>(rng() % negatives.size());
                const auto [ref, box] = negatives[pick];
                negatives[pick] = negatives.back();
                negatives.pop_back();
                pending.push_back({f, k, ref, box, window_descriptor(features, ref), -1});
            }
            stores[static_cast<std::size_t>(k)].put(std::move(scores));
        }
    }

    const auto neighbors_of = [&](int fold, int frame, const BBox& box, int level) {
        const auto track = build_track(box, frame, spec, plan.range_of(fold), lookup);
        return gather_neighbor_scores(track, spec, stores[static_cast<std::size_t>(fold)], level, fill);
    };

    TrainSet set;
    std::size_t positives = 0;
    for (auto& p : pending) {
        AugmentedSample sample{std::move(p.descriptor), neighbors_of(p.fold, p.frame, p.box, p.window.level), p.label};
        set.add(augmented_descriptor(sample, ssl_layout), p.label, {p.frame, p.box});
        positives += p.label == 1 ? 1 : 0;
    }
    pending.clear();
    if (positives == 0) {
        throw DataError("no positive windows for ssl training");
    }

    const auto finalize = [&](LinearModel m) {
        m.kind = ModelKind::ssl;
        m.channels = channels;
        m.neighborhood = spec;
        m.layout_id = ssl_layout;
        return m;
    };
    LinearModel current = finalize(train(set, cfg.ssl_svm));
    const std::size_t dlen = channels.descriptor_length();

    for (int round = 1; round <= boot.rounds && boot.max_mined > 0; ++round) {
        const std::span<const double> dw(current.weights.data(), dlen);
        std::priority_queue<MinedSample, std::vector<MinedSample>, WorseFirst> heap;
        for (int k = 0; k < plan.K; ++k) {
            const auto& store = stores[static_cast<std::size_t>(k)];
            for (int f : plan.frames_in(k)) {
                const auto* scores = store.find(f);
                const auto& anns = by_frame[static_cast<std::size_t>(f)];
                std::optional<FrameFeatures> features;
                for (std::size_t l = 0; l < scores->maps.size(); ++l) {
                    const auto& map = scores->maps[l];
                    const auto& g = scores->levels[l];
                    for (int gy = 0; gy < map.rows; ++gy) {
                        for (int gx = 0; gx < map.cols; ++gx) {
                            if (map.at(gy, gx) < stage1) {
                                continue;
                            }
                            const auto box = window_box(g, gx, gy, channels);
                            if (overlaps_annotation(box, anns, boot.neg_max_iou)) {
                                continue;
                            }
                            if (!features) {
                                features = features_of(f);
                            }
                            const auto nb = neighbors_of(k, f, box, static_cast<int>(l));
                            const auto& ch = features->channels[l];
                            const int step = g.stride / ch.cell_size;
                            double s = current.bias + window_dot(ch, gx * step, gy * step, dw);
                            for (std::size_t i = 0; i < nb.size(); ++i) {
                                s += current.weights[dlen + i] * static_cast<double>(static_cast<float>(nb[i]));
                            }
                            if (!(s > boot.mining_threshold)) {
                                continue;
                            }
                            if (heap.size() == boot.max_mined && !(s > heap.top().score)) {
                                continue;
                            }
                            heap.push({s, f, {static_cast<int>(l), gx, gy}, k, box});
                            if (heap.size() > boot.max_mined) {
                                heap.pop();
                            }
                        }
                    }
                }
            }
        }
        if (heap.empty()) {
            continue;
        }
        std::vector<MinedSample> mined;
        while (!heap.empty()) {
            mined.push_back(heap.top());
            heap.pop();
        }
        // Frame order so each frame's channels are computed once.
        std::sort(mined.begin(), mined.end(), [](const MinedSample& a, const MinedSample& b) {
            return std::tuple(a.frame, a.window.level, a.window.gy, a.window.gx) <
                   std::tuple(b.frame, b.window.level, b.window.gy, b.window.gx);
        });
        int cached_frame = -1;
        std::optional<FrameFeatures> features;
        for (const auto& m : mined) {
            if (m.frame != cached_frame) {
                features = features_of(m.frame);
                cached_frame = m.frame;
            }
            AugmentedSample sample{window_descriptor(*features, m.window),
                                   neighbors_of(m.fold, m.frame, m.box, m.window.level), -1};
            set.add(augmented_descriptor(sample, ssl_layout), -1, {m.frame, m.box});
        }
        current = finalize(train(set, cfg.ssl_svm));
    }
    if (positives_out != nullptr) {
        *positives_out = positives;
    }
    if (negatives_out != nullptr) {
        *negatives_out = set.size() - positives;
    }
    return current;
}

SslModels train_ssl(const ImageSequence& seq, const SslTrainConfig& cfg)
{
    cfg.scan.validate();
    cfg.neighborhood.validate();
    const auto plan = make_fold_plan(seq, cfg.K);
    const bool need_flow = cfg.scan.channels.flow_hist || cfg.neighborhood.mode == VolumeMode::optical_flow;
    std::vector<FlowField> flows;
    if (need_flow) {
        flows = compute_sequence_flows(seq, cfg.scan.flow_block, cfg.scan.flow_radius);
    }
    const std::vector<FlowField>* flow_ptr = need_flow ? &flows : nullptr;

    SslModels out;
    out.base = bootstrap_train(seq, {}, cfg.scan, cfg.svm, cfg.bootstrap, flow_ptr).model;
    if (plan.K == 1) {
        out.fold_models.push_back(out.base);
    } else {
        for (int k = 0; k < plan.K; ++k) {
            out.fold_models.push_back(
                bootstrap_train(seq, plan.frames_outside(k), cfg.scan, cfg.svm, cfg.bootstrap, flow_ptr).model);
        }
    }
    out.ssl = train_ssl_classifier(seq, cfg, plan, out.fold_models, flow_ptr, &out.ssl_positives, &out.ssl_negatives);
    return out;
}

}  // namespace sslped
