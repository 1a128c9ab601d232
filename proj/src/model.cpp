#include "sslped/model.hpp"

#include <sstream>

namespace sslped {

std::string_view to_string(ModelKind kind) { return kind == ModelKind::base ? "base" : "ssl"; }

std::uint64_t ssl_layout_id(const ChannelConfig& channels, const NeighborhoodSpec& spec)
{
    std::ostringstream s;
    s << channels.describe() << ";ssl=" << spec.score_count();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s.str()) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::size_t expected_length(ModelKind kind, const ChannelConfig& channels, const NeighborhoodSpec& spec)
{
    return channels.descriptor_length() + (kind == ModelKind::ssl ? spec.score_count() : 0);
}

}  // namespace sslped
