#pragma once

#include "sslped/features.hpp"
#include "sslped/neighborhood.hpp"
#include "sslped/pyramid.hpp"
#include "sslped/sequence_io.hpp"

#include <vector>

namespace sslped {

/// Contiguous, disjoint frame chunks covering the sequence.
struct FoldPlan {
    int K = 1;
    std::vector<int> fold_of_frame;

    [[nodiscard]] std::vector<int> frames_in(int fold) const;
    [[nodiscard]] std::vector<int> frames_outside(int fold) const;
    [[nodiscard]] FrameRange range_of(int fold) const;
};

/// K near-equal contiguous chunks; the first (N mod K) chunks get one extra frame.
FoldPlan make_fold_plan(int frame_count, int K);
inline FoldPlan make_fold_plan(const ImageSequence& seq, int K) { return make_fold_plan(seq.size(), K); }

/// Reads base scores over the track's windows and the spatial displacement
/// grid, on the candidate's pyramid level. Frame-major (oldest first), then
/// row-major over (j, i). Positions off the grid read `out_of_grid`.
std::vector<double> gather_neighbor_scores(const WindowTrack& track, const NeighborhoodSpec& spec,
                                           const ScoreMapStore& store, int level,
                                           double out_of_grid);

struct AugmentedSample {
    Descriptor base_descriptor;
    std::vector<double> neighbor_scores;
    int label = 0;
};

/// [descriptor || neighbor scores] as one vector tagged with the SSL layout.
Descriptor augmented_descriptor(const AugmentedSample& sample, std::uint64_t ssl_layout);

}  // namespace sslped
