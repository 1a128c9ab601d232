#pragma once

#include "sslped/features.hpp"
#include "sslped/neighborhood.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace sslped {

enum class ModelKind { base, ssl };

std::string_view to_string(ModelKind kind);

/// Linear classifier w.x + b. Base models score window descriptors; SSL
/// models score descriptors followed by neighborhood scores.
struct LinearModel {
    std::vector<double> weights;
    double bias = 0.0;
    std::uint64_t layout_id = 0;
    ModelKind kind = ModelKind::base;
    ChannelConfig channels;
    NeighborhoodSpec neighborhood;  // meaningful for ssl models only

    friend bool operator==(const LinearModel&, const LinearModel&) = default;
};

/// Layout of [descriptor || neighborhood scores].
std::uint64_t ssl_layout_id(const ChannelConfig& channels, const NeighborhoodSpec& spec);

/// Expected weight count for a model of the given kind.
std::size_t expected_length(ModelKind kind, const ChannelConfig& channels,
                            const NeighborhoodSpec& spec);

}  // namespace sslped
