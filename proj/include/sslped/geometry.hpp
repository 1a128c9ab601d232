#pragma once

#include <algorithm>
#include <cstdint>

namespace sslped {

/// Axis-aligned box in integer pixels, (x, y) is the top-left corner.
struct BBox {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    [[nodiscard]] std::int64_t area() const { return std::int64_t{w} * h; }
    [[nodiscard]] bool valid() const { return w > 0 && h > 0; }

    friend bool operator==(const BBox&, const BBox&) = default;
};

[[nodiscard]] inline std::int64_t intersection_area(const BBox& a, const BBox& b)
{
    const int x0 = std::max(a.x, b.x);
    const int y0 = std::max(a.y, b.y);
    const int x1 = std::min(a.x + a.w, b.x + b.w);
    const int y1 = std::min(a.y + a.h, b.y + b.h);
    if (x1 <= x0 || y1 <= y0) {
        return 0;
    }
    return std::int64_t{x1 - x0} * (y1 - y0);
}

/// Intersection over union; 0 for degenerate boxes.
[[nodiscard]] inline double iou(const BBox& a, const BBox& b)
{
    const auto inter = intersection_area(a, b);
    if (inter == 0) {
        return 0.0;
    }
    const auto uni = a.area() + b.area() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace sslped
