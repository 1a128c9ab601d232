#include "sslped/ssl_core.hpp"

#include "sslped/errors.hpp"

#include <cmath>
#include <string>

namespace sslped {

std::vector<int> FoldPlan::frames_in(int fold) const
{
    std::vector<int> out;
    for (std::size_t f = 0; f < fold_of_frame.size(); ++f) {
        if (fold_of_frame[f] == fold) {
            out.push_back(static_cast<int>(f));
        }
    }
    return out;
}

std::vector<int> FoldPlan::frames_outside(int fold) const
{
    std::vector<int> out;
    for (std::size_t f = 0; f < fold_of_frame.size(); ++f) {
        if (fold_of_frame[f] != fold || K == 1) {
            out.push_back(static_cast<int>(f));
        }
    }
    return out;
}

FrameRange FoldPlan::range_of(int fold) const
{
    const auto frames = frames_in(fold);
    if (frames.empty()) {
        throw UsageError("empty fold " + std::to_string(fold));
    }
    return {frames.front(), frames.back()};
}

FoldPlan make_fold_plan(int frame_count, int K)
{
    if (K < 1) {
        throw UsageError("K must be >= 1");
    }
    if (K > frame_count) {
        throw UsageError("K exceeds the number of frames");
    }
    FoldPlan plan;
    plan.K = K;
    plan.fold_of_frame.resize(static_cast<std::size_t>(frame_count));
    const int base = frame_count / K;
    const int extra = frame_count % K;
    int f = 0;
    for (int k = 0; k < K; ++k) {
        const int size = base + (k < extra ? 1 : 0);
        for (int i = 0; i < size; ++i) {
            plan.fold_of_frame[static_cast<std::size_t>(f++)] = k;
        }
    }
    return plan;
}

std::vector<double> gather_neighbor_scores(const WindowTrack& track, const NeighborhoodSpec& spec,
                                           const ScoreMapStore& store, int level, double out_of_grid)
{
    std::vector<double> out;
    out.reserve(spec.score_count());
    for (std::size_t k = 0; k < track.windows.size(); ++k) {
        const auto* scores = store.find(track.frames[k]);
        if (scores == nullptr) {
            throw Error("no score maps cached for frame " + std::to_string(track.frames[k]));
        }
        if (level < 0 || static_cast<std::size_t>(level) >= scores->maps.size()) {
            throw Error("no score map for pyramid level " + std::to_string(level));
        }
        const auto& g = scores->levels[static_cast<std::size_t>(level)];
        const auto& map = scores->maps[static_cast<std::size_t>(level)];
        const auto& w = track.windows[k];
        const double x0 = w.x * g.scale + g.pad_x;
        const double y0 = w.y * g.scale + g.pad_y;
        for (int j = -spec.ny; j <= spec.ny; ++j) {
            const auto gy = static_cast<int>(std::lround((y0 + j * spec.step_y) / g.stride));
            for (int i = -spec.nx; i <= spec.nx; ++i) {
                const auto gx = static_cast<int>(std::lround((x0 + i * spec.step_x) / g.stride));
                if (gx < 0 || gy < 0 || gx >= map.cols || gy >= map.rows) {
                    out.push_back(out_of_grid);
                } else {
                    out.push_back(map.at(gy, gx));
                }
            }
        }
    }
    return out;
}

Descriptor augmented_descriptor(const AugmentedSample& sample, std::uint64_t ssl_layout)
{
    Descriptor d;
    d.layout_id = ssl_layout;
    d.values.reserve(sample.base_descriptor.values.size() + sample.neighbor_scores.size());
    d.values = sample.base_descriptor.values;
    for (double s : sample.neighbor_scores) {
        d.values.push_back(static_cast<float>(s));
    }
    return d;
}

}  // namespace sslped
