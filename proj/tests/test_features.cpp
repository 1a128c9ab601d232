#include "sslped/errors.hpp"
#include "sslped/features.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace sslped;

namespace {

ChannelConfig only(bool grad, bool lbp, int w = 24, int h = 48)
{
    ChannelConfig c;
    c.grad_hist = grad;
    c.lbp_hist = lbp;
    c.window_w = w;
    c.window_h = h;
    return c;
}

int px(const Frame& f, int x, int y)
{
    x = std::clamp(x, 0, f.width - 1);
    y = std::clamp(y, 0, f.height - 1);
    return f.pixels[static_cast<std::size_t>(y) * f.width + x];
}

// Brute-force HOG cell/block computation straight from the definition.
std::vector<double> oracle_blocks(const Frame& f, int cell)
{
    const int rows = f.height / cell;
    const int cols = f.width / cell;
    std::vector<double> hist(static_cast<std::size_t>(rows * cols * 9), 0.0);
    for (int y = 0; y < rows * cell; ++y) {
        for (int x = 0; x < cols * cell; ++x) {
            const double gx = px(f, x + 1, y) - px(f, x - 1, y);
            const double gy = px(f, x, y + 1) - px(f, x, y - 1);
            const double mag = std::hypot(gx, gy);
            if (mag == 0.0) {
                continue;
            }
            double deg = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
            while (deg < 0.0) {
                deg += 180.0;
            }
            while (deg >= 180.0) {
                deg -= 180.0;
            }
            const int lo = static_cast<int>(deg / 20.0);
            const double t = deg / 20.0 - lo;
            auto* h = &hist[static_cast<std::size_t>(((y / cell) * cols + x / cell) * 9)];
            h[lo % 9] += mag * (1 - t);
            h[(lo + 1) % 9] += mag * t;
        }
    }
    std::vector<double> out(static_cast<std::size_t>(rows * cols * 36), 0.0);
    for (int r = 0; r + 1 < rows; ++r) {
        for (int c = 0; c + 1 < cols; ++c) {
            std::vector<double> b;
            for (int dr = 0; dr < 2; ++dr) {
                for (int dc = 0; dc < 2; ++dc) {
                    for (int k = 0; k < 9; ++k) {
                        b.push_back(hist[static_cast<std::size_t>(((r + dr) * cols + c + dc) * 9 + k)]);
                    }
                }
            }
            double n2 = 0;
            for (double v : b) {
                n2 += v * v;
            }
            const double eps = cell * cell;
            for (int k = 0; k < 36; ++k) {
                out[static_cast<std::size_t>((r * cols + c) * 36 + k)] = b[static_cast<std::size_t>(k)] /
                                                                          std::sqrt(n2 + eps * eps);
            }
        }
    }
    return out;
}

// Uniform LBP by explicit bit transitions; uniform codes numbered in
// ascending code order, all others share the last bin.
int oracle_lbp_bin(const Frame& f, int x, int y)
{
    const int dx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
    const int dy[8] = {0, 1, 1, 1, 0, -1, -1, -1};
    const int c = px(f, x, y);
    int code = 0;
    for (int k = 0; k < 8; ++k) {
        if (px(f, x + dx[k], y + dy[k]) >= c) {
            code += 1 << k;
        }
    }
    const auto transitions = [](int v) {
        int t = 0;
        for (int k = 0; k < 8; ++k) {
            t += ((v >> k) & 1) != ((v >> ((k + 1) % 8)) & 1) ? 1 : 0;
        }
        return t;
    };
    if (transitions(code) > 2) {
        return 58;
    }
    int index = 0;
    for (int v = 0; v < code; ++v) {
        index += transitions(v) <= 2 ? 1 : 0;
    }
    return index;
}

Frame shifted(const Frame& src, int du, int dv)
{
    Frame out(src.index + 1, src.width, src.height);
    for (int y = 0; y < src.height; ++y) {
        for (int x = 0; x < src.width; ++x) {
            out.at(x, y) = static_cast<std::uint8_t>(px(src, x - du, y - dv));
        }
    }
    return out;
}

}  // namespace

TEST_CASE("uniform frame has no gradient energy")
{
    const Frame f(0, 32, 32, 77);
    const auto ch = compute_channels(f, only(true, false));
    for (float v : ch.planes[0].values) {
        CHECK(v == 0.0F);
    }
}

TEST_CASE("vertical step edge votes only into the horizontal-gradient bin")
{
    Frame f(0, 32, 32, 20);
    for (int y = 0; y < 32; ++y) {
        for (int x = 12; x < 32; ++x) {
            f.at(x, y) = 200;
        }
    }
    const auto ch = compute_channels(f, only(true, false));
    const auto& g = ch.planes[0];
    double total = 0.0;
    double bin0 = 0.0;
    for (int r = 0; r < g.rows; ++r) {
        for (int c = 0; c < g.cols; ++c) {
            for (int k = 0; k < 36; ++k) {
                total += g.cell(r, c)[k];
                bin0 += k % 9 == 0 ? g.cell(r, c)[k] : 0.0F;
            }
        }
    }
    CHECK(total > 0.0);
    CHECK(bin0 == doctest::Approx(total));
}

TEST_CASE("gradient channel matches a brute-force HOG")
{
    std::mt19937_64 rng(5);
    const auto f = testutil::random_frame(rng, 0, 40, 56);
    const auto ch = compute_channels(f, only(true, false));
    const auto oracle = oracle_blocks(f, 8);
    REQUIRE(ch.planes[0].values.size() == oracle.size());
    for (std::size_t i = 0; i < oracle.size(); ++i) {
        CHECK(ch.planes[0].values[i] == doctest::Approx(oracle[i]).epsilon(1e-5));
    }
}

TEST_CASE("2 px checkerboard LBP histograms match a per-pixel oracle")
{
    Frame f(0, 32, 24);
    for (int y = 0; y < f.height; ++y) {
        for (int x = 0; x < f.width; ++x) {
            f.at(x, y) = ((x / 2) + (y / 2)) % 2 == 0 ? 30 : 220;
        }
    }
    std::mt19937_64 rng(9);
    const auto noisy = testutil::random_frame(rng, 0, 32, 24);
    for (const Frame* frame : std::initializer_list<const Frame*>{&f, &noisy}) {
        const auto ch = compute_channels(*frame, only(false, true));
        const auto& g = ch.planes[0];
        for (int r = 0; r < g.rows; ++r) {
            for (int c = 0; c < g.cols; ++c) {
                std::vector<int> counts(59, 0);
                for (int y = r * 8; y < r * 8 + 8; ++y) {
                    for (int x = c * 8; x < c * 8 + 8; ++x) {
                        ++counts[static_cast<std::size_t>(oracle_lbp_bin(*frame, x, y))];
                    }
                }
                for (int k = 0; k < 59; ++k) {
                    CHECK(g.cell(r, c)[k] ==
                          doctest::Approx(std::sqrt(counts[static_cast<std::size_t>(k)] / 64.0)).epsilon(1e-6));
                }
            }
        }
    }
    CHECK(uniform_lbp_bin(f, 5, 5) == oracle_lbp_bin(f, 5, 5));
}

TEST_CASE("descriptor lengths follow the closed form")
{
    CHECK(only(true, false, 64, 128).descriptor_length() == 3780);
    CHECK(only(false, true, 64, 128).descriptor_length() == 7552);
    CHECK(only(true, true, 64, 128).descriptor_length() == 3780 + 7552);
    auto hof = only(false, false, 64, 128);
    hof.flow_hist = true;
    CHECK(hof.descriptor_length() == 8 * 16 * 10);

    std::mt19937_64 rng(2);
    const auto f = testutil::random_frame(rng, 0, 80, 144);
    const auto ch = compute_channels(f, only(true, true, 64, 128));
    CHECK(extract_descriptor(ch, {8, 8, 64, 128}).values.size() == 3780 + 7552);
}

TEST_CASE("descriptor length is a pure function of the configuration")
{
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        ChannelConfig c;
        c.cell_size = 4 + 2 * static_cast<int>(rng() % 3);
        c.window_w = c.cell_size * (2 + static_cast<int>(rng() % 4));
        c.window_h = c.cell_size * (2 + static_cast<int>(rng() % 6));
        c.grad_hist = rng() % 2 == 0;
        c.lbp_hist = !c.grad_hist || rng() % 2 == 0;
        const int wc = c.window_w / c.cell_size;
        const int hc = c.window_h / c.cell_size;
        const std::size_t expect = (c.grad_hist ? static_cast<std::size_t>((wc - 1) * (hc - 1) * 36) : 0U) +
                                   (c.lbp_hist ? static_cast<std::size_t>(wc * hc * 59) : 0U);
        CHECK(c.descriptor_length() == expect);
        const auto f = testutil::random_frame(rng, 0, c.window_w + 16, c.window_h + 8);
        const auto ch = compute_channels(f, c);
        CHECK(extract_descriptor(ch, {0, 0, c.window_w, c.window_h}).values.size() == expect);
    }
}

TEST_CASE("descriptor values are finite and block norms stay within one")
{
    std::mt19937_64 rng(6);
    const auto f = testutil::random_frame(rng, 0, 64, 96);
    const auto ch = compute_channels(f, only(true, true));
    const auto d = extract_descriptor(ch, {16, 24, 24, 48});
    for (float v : d.values) {
        CHECK(std::isfinite(v));
    }
    const std::size_t blocks = 2 * 5;
    for (std::size_t b = 0; b < blocks; ++b) {
        double n2 = 0.0;
        for (std::size_t k = 0; k < 36; ++k) {
            n2 += static_cast<double>(d.values[b * 36 + k]) * d.values[b * 36 + k];
        }
        CHECK(std::sqrt(n2) <= 1.0 + 1e-6);
    }
}

TEST_CASE("identical frames give bit-identical channels and descriptors")
{
    std::mt19937_64 rng(8);
    auto a = testutil::random_frame(rng, 0, 48, 64);
    auto b = a;
    b.index = 7;
    const auto ca = compute_channels(a, only(true, true));
    const auto cb = compute_channels(b, only(true, true));
    for (std::size_t p = 0; p < ca.planes.size(); ++p) {
        CHECK(ca.planes[p].values == cb.planes[p].values);
    }
    CHECK(extract_descriptor(ca, {8, 8, 24, 48}).values == extract_descriptor(cb, {8, 8, 24, 48}).values);
}

TEST_CASE("window extraction and fused dot product agree with the descriptor")
{
    std::mt19937_64 rng(10);
    const auto f = testutil::random_frame(rng, 0, 56, 80);
    const auto cfg = only(true, true);
    const auto ch = compute_channels(f, cfg);
    const auto d = extract_descriptor(ch, {16, 8, 24, 48});
    std::vector<float> w(cfg.descriptor_length());
    extract_window(ch, 2, 1, w);
    CHECK(w == d.values);
    std::vector<double> weights(d.values.size());
    double expect = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        weights[k] = static_cast<double>(rng() % 2001) / 1000.0 - 1.0;
        expect += weights[k] * d.values[k];
    }
    CHECK(window_dot(ch, 2, 1, weights) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("channel and window errors")
{
    CHECK_THROWS_AS(compute_channels(Frame(0, 7, 7), only(true, true)), DataError);
    ChannelConfig hof;
    hof.flow_hist = true;
    CHECK_THROWS_AS(compute_channels(Frame(0, 32, 64), hof), UsageError);
    ChannelConfig none = only(false, false);
    CHECK_THROWS_AS(none.validate(), UsageError);

    std::mt19937_64 rng(12);
    const auto ch = compute_channels(testutil::random_frame(rng, 0, 48, 64), only(true, true));
    CHECK_THROWS_AS(extract_descriptor(ch, {3, 0, 24, 48}), DataError);
    CHECK_THROWS_AS(extract_descriptor(ch, {32, 0, 24, 48}), DataError);
}

TEST_CASE("flow of identical frames is zero")
{
    std::mt19937_64 rng(13);
    const auto f = testutil::random_frame(rng, 0, 64, 48);
    const auto flow = compute_flow(f, f, 8, 4);
    for (std::size_t i = 0; i < flow.u.size(); ++i) {
        CHECK(flow.u[i] == 0.0F);
        CHECK(flow.v[i] == 0.0F);
    }
}

TEST_CASE("flow recovers a 3 px shift to the right on interior blocks")
{
    std::mt19937_64 rng(14);
    const auto prev = testutil::random_frame(rng, 0, 80, 64);
    const auto curr = shifted(prev, 3, 0);
    const auto flow = compute_flow(prev, curr, 8, 4);
    for (int r = 1; r + 1 < flow.rows; ++r) {
        for (int c = 1; c + 1 < flow.cols; ++c) {
            CHECK(flow.u_at(r, c) == 3.0F);
            CHECK(flow.v_at(r, c) == 0.0F);
        }
    }
}

TEST_CASE("flow between unrelated noise frames stays within the search radius")
{
    std::mt19937_64 rng(15);
    const auto a = testutil::random_frame(rng, 0, 64, 64);
    const auto b = testutil::random_frame(rng, 1, 64, 64);
    const auto flow = compute_flow(a, b, 8, 3);
    for (std::size_t i = 0; i < flow.u.size(); ++i) {
        CHECK(std::abs(flow.u[i]) <= 3.0F);
        CHECK(std::abs(flow.v[i]) <= 3.0F);
    }
    CHECK_THROWS_AS(compute_flow(a, Frame(0, 32, 32), 8, 3), DataError);
}

TEST_CASE("flow tie-break prefers the smallest displacement")
{
    const Frame flat(0, 32, 32, 100);
    const auto flow = compute_flow(flat, flat, 8, 3);
    CHECK(flow.u_at(1, 1) == 0.0F);
    // A horizontally constant pattern matches equally well at every du.
    Frame bars(0, 40, 40);
    for (int y = 0; y < 40; ++y) {
        for (int x = 0; x < 40; ++x) {
            bars.at(x, y) = static_cast<std::uint8_t>((y * 37) % 251);
        }
    }
    const auto f2 = compute_flow(bars, bars, 8, 3);
    CHECK(f2.u_at(2, 2) == 0.0F);
    CHECK(f2.v_at(2, 2) == 0.0F);
}

TEST_CASE("mean flow in a window")
{
    FlowField uniform(4, 4, 8);
    std::fill(uniform.u.begin(), uniform.u.end(), 3.0F);
    auto m = mean_flow_in_window(uniform, {0, 0, 32, 32});
    CHECK(m.du == 3.0);
    CHECK(m.dv == 0.0);

    FlowField halves(2, 4, 8);
    for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 4; ++c) {
            halves.u[static_cast<std::size_t>(r * 4 + c)] = c < 2 ? 2.0F : 4.0F;
        }
    }
    m = mean_flow_in_window(halves, {0, 0, 32, 16});
    CHECK(m.du == 3.0);

    m = mean_flow_in_window(uniform, {100, 100, 16, 16});
    CHECK(m.du == 0.0);
    CHECK(m.dv == 0.0);
}

TEST_CASE("flow channel bins by direction and magnitude")
{
    Frame f(0, 32, 32, 50);
    FlowField flow(32, 32, 1);
    std::fill(flow.u.begin(), flow.u.end(), 2.0F);
    ChannelConfig hof = only(false, false, 16, 16);
    hof.flow_hist = true;
    const auto ch = compute_channels(f, hof, &flow);
    const auto& g = ch.planes[0];
    REQUIRE(g.bins == 10);
    // Direction 0 degrees: all weight in bin 0 plus the magnitude bin.
    for (int k = 1; k < 9; ++k) {
        CHECK(g.cell(1, 1)[k] == doctest::Approx(0.0));
    }
    CHECK(g.cell(1, 1)[0] > 0.0F);
    CHECK(g.cell(1, 1)[9] > 0.0F);
}
