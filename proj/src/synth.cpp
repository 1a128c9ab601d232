#include "sslped/synth.hpp"

#include "sslped/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace sslped {

namespace {

// Independent, reproducible streams derived from the seed.
std::mt19937_64 stream(std::uint64_t seed, std::uint64_t salt)
{
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return std::mt19937_64(z ^ (z >> 31));
}

double uniform(std::mt19937_64& rng, double lo, double hi)
{
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

int uniform_int(std::mt19937_64& rng, int lo, int hi)  // inclusive
{
    return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

double gaussian(std::mt19937_64& rng)
{
    double u1 = uniform(rng, 0.0, 1.0);
    const double u2 = uniform(rng, 0.0, 1.0);
    u1 = std::max(u1, 1e-300);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

enum class Shape { pedestrian, block, ellipse, headless };

struct Appearance {
    Shape shape = Shape::pedestrian;
    int period = 4;
    int phase = 0;
    double tone_a = 40;
    double tone_b = 200;
};

struct Target {
    double x0 = 0;  // position at spawn
    double y0 = 0;
    double vx = 0;
    double vy = 0;
    int w = 0;
    int h = 0;
    int age = 0;
    double jx = 0;  // current jitter
    double jy = 0;
    Appearance look;
};

struct Distractor {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;
    int life = 0;  // frames left
    Appearance look;
};

bool inside_shape(Shape shape, double u, double v)  // u, v in [0,1) of the box
{
    switch (shape) {
    case Shape::pedestrian: {
        const double hx = (u - 0.5) / 0.18;
        const double hy = (v - 0.09) / 0.085;
        if (hx * hx + hy * hy <= 1.0) {
            return true;
        }
        if (v >= 0.17 && v < 0.60 && u >= 0.18 && u < 0.82) {
            return true;
        }
        if (v >= 0.19 && v < 0.52 && ((u >= 0.0 && u < 0.18) || (u >= 0.82 && u < 1.0))) {
            return true;
        }
        return v >= 0.60 && ((u >= 0.22 && u < 0.46) || (u >= 0.54 && u < 0.78));
    }
    case Shape::block:
        return u >= 0.1 && u < 0.9 && v >= 0.15 && v < 0.95;
    case Shape::ellipse: {
        const double ex = (u - 0.5) / 0.5;
        const double ey = (v - 0.5) / 0.5;
        return ex * ex + ey * ey <= 1.0;
    }
    case Shape::headless:
        if (v >= 0.17 && v < 0.60 && u >= 0.18 && u < 0.82) {
            return true;
        }
        return v >= 0.60 && ((u >= 0.22 && u < 0.46) || (u >= 0.54 && u < 0.78));
    }
    return false;
}

double texture_value(const Appearance& look, Texture texture, int lx, int ly)
{
    const int p = look.period;
    bool a = false;
    if (texture == Texture::bar_pattern) {
        a = ((ly + look.phase) / p) % 2 == 0;
    } else {
        a = (((ly + look.phase) / p) + (lx / p)) % 2 == 0;
    }
    return a ? look.tone_a : look.tone_b;
}

Appearance random_look(std::mt19937_64& rng, int h, Shape shape)
{
    Appearance look;
    look.shape = shape;
    look.period = std::max(2, static_cast<int>(std::lround(h / uniform(rng, 8.0, 12.0))));
    look.phase = uniform_int(rng, 0, look.period - 1);
    look.tone_a = uniform(rng, 15.0, 70.0);
    look.tone_b = uniform(rng, 170.0, 240.0);
    if ((rng() & 1U) != 0U) {
        std::swap(look.tone_a, look.tone_b);
    }
    return look;
}

// Paints the shape; returns the exact bounding box of painted pixels.
BBox paint(std::vector<double>& canvas, int width, int height, int x, int y, int w, int h, const Appearance& look,
           Texture texture)
{
    int x0 = width;
    int y0 = height;
    int x1 = -1;
    int y1 = -1;
    for (int ly = 0; ly < h; ++ly) {
        const int py = y + ly;
        if (py < 0 || py >= height) {
            continue;
        }
        for (int lx = 0; lx < w; ++lx) {
            const int px = x + lx;
            if (px < 0 || px >= width) {
                continue;
            }
            if (!inside_shape(look.shape, (lx + 0.5) / w, (ly + 0.5) / h)) {
                continue;
            }
            canvas[static_cast<std::size_t>(py) * width + px] = texture_value(look, texture, lx, ly);
            x0 = std::min(x0, px);
            y0 = std::min(y0, py);
            x1 = std::max(x1, px);
            y1 = std::max(y1, py);
        }
    }
    if (x1 < 0) {
        return {};
    }
    return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

std::vector<double> make_background(const SynthConfig& cfg)
{
    auto rng = stream(cfg.seed, 1);
    const int w = cfg.width;
    const int h = cfg.height;
    std::vector<double> bg(static_cast<std::size_t>(w) * h, 0.0);
    const double gx = uniform(rng, -30.0, 30.0);
    const double gy = uniform(rng, -30.0, 30.0);
    struct Blob {
        double cx, cy, r, a;
    };
    std::vector<Blob> blobs;
    for (int i = 0; i < 12; ++i) {
        blobs.push_back({uniform(rng, 0, w), uniform(rng, 0, h), uniform(rng, 15, 70), uniform(rng, -40, 40)});
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double v = 120.0 + gx * (x / static_cast<double>(w) - 0.5) + gy * (y / static_cast<double>(h) - 0.5);
            for (const auto& b : blobs) {
                const double dx = x - b.cx;
                const double dy = y - b.cy;
                v += b.a * std::exp(-(dx * dx + dy * dy) / (2.0 * b.r * b.r));
            }
            bg[static_cast<std::size_t>(y) * w + x] = v;
        }
    }
    // Static clutter: poles and horizontal structures.
    for (int i = 0; i < 10; ++i) {
        const bool vertical = (rng() & 1U) != 0U;
        const int len = uniform_int(rng, 20, vertical ? h / 2 : w / 3);
        const int thick = uniform_int(rng, 2, 6);
        const int x0 = uniform_int(rng, 0, w - 1);
        const int y0 = uniform_int(rng, 0, h - 1);
        const double tone = uniform(rng, 30.0, 220.0);
        const int bw = vertical ? thick : len;
        const int bh = vertical ? len : thick;
        for (int y = y0; y < std::min(h, y0 + bh); ++y) {
            for (int x = x0; x < std::min(w, x0 + bw); ++x) {
                bg[static_cast<std::size_t>(y) * w + x] = tone;
            }
        }
    }
    return bg;
}

class Simulation {
public:
    explicit Simulation(const SynthConfig& cfg)
        : cfg_(cfg), targets_rng_(stream(cfg.seed, 2)), distractor_rng_(stream(cfg.seed, 3)),
          background_(make_background(cfg))
    {
        targets_.resize(static_cast<std::size_t>(cfg.n_targets));
        for (auto& t : targets_) {
            spawn(t);
        }
        distractors_.resize(static_cast<std::size_t>(cfg.distractors));
        for (auto& d : distractors_) {
            spawn(d);
            d.life = uniform_int(distractor_rng_, 1, cfg_.distractor_max_life);
        }
    }

    // Advances the state to the next frame (called before every frame but the first).
    void step()
    {
        for (auto& t : targets_) {
            ++t.age;
            jitter(t);
            const auto box = base_box(t);
            if (box.x < 0 || box.y < 0 || box.x + box.w > cfg_.width || box.y + box.h > cfg_.height) {
                spawn(t);
            }
        }
        for (auto& d : distractors_) {
            if (--d.life <= 0) {
                spawn(d);
            }
        }
    }

    void render(int index, ImageSequence& out)
    {
        const int w = cfg_.width;
        const int h = cfg_.height;
        std::vector<double> canvas = background_;
        for (const auto& d : distractors_) {
            paint(canvas, w, h, d.x, d.y, d.w, d.h, d.look, cfg_.texture);
        }
        // Farther (smaller) targets first so nearer ones occlude them.
        std::vector<std::size_t> order(targets_.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            order[i] = i;
        }
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return targets_[a].h < targets_[b].h; });
        std::vector<Annotation> anns;
        std::vector<BBox> drawn;
        for (std::size_t i : order) {
            const auto& t = targets_[i];
            const auto pos = position(t);
            const BBox box = paint(canvas, w, h, pos.x, pos.y, t.w, t.h, t.look, cfg_.texture);
            anns.push_back({index, box, Label::pedestrian, false});
            drawn.push_back(box);
        }
        for (std::size_t a = 0; a < anns.size(); ++a) {
            for (std::size_t b = a + 1; b < anns.size(); ++b) {
                if (intersection_area(drawn[a], drawn[b]) > 0) {
                    anns[a].occluded = true;
                }
            }
        }
        out.annotations.insert(out.annotations.end(), anns.begin(), anns.end());
        Frame frame(static_cast<int>(out.frames.size()), w, h);
        auto noise = stream(cfg_.seed, 1000 + static_cast<std::uint64_t>(index));
        for (std::size_t p = 0; p < canvas.size(); ++p) {
            double v = canvas[p];
            if (cfg_.noise_sigma > 0.0) {
                v += cfg_.noise_sigma * gaussian(noise);
            }
            frame.pixels[p] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
        }
        out.frames.push_back(std::move(frame));
    }

private:
    struct IntPos {
        int x, y;
    };

    [[nodiscard]] IntPos position(const Target& t) const
    {
        return {static_cast<int>(std::lround(t.x0 + t.vx * t.age + t.jx)),
                static_cast<int>(std::lround(t.y0 + t.vy * t.age + t.jy))};
    }

    [[nodiscard]] BBox base_box(const Target& t) const
    {
        const auto p = position(t);
        return {p.x, p.y, t.w, t.h};
    }

    void jitter(Target& t)
    {
        t.jx = cfg_.jitter > 0.0 ? uniform(targets_rng_, -cfg_.jitter, cfg_.jitter) : 0.0;
        t.jy = cfg_.jitter > 0.0 ? uniform(targets_rng_, -cfg_.jitter, cfg_.jitter) : 0.0;
    }

    void spawn(Target& t)
    {
        auto& rng = targets_rng_;
        const double lh = uniform(rng, std::log(static_cast<double>(cfg_.min_target_h)),
                                  std::log(static_cast<double>(cfg_.max_target_h)));
        t.h = static_cast<int>(std::lround(std::exp(lh)));
        t.w = std::max(2, static_cast<int>(std::lround(t.h * 0.5)));
        const double speed = uniform(rng, cfg_.min_speed, cfg_.max_speed);
        const double dir = (rng() & 1U) != 0U ? 1.0 : -1.0;
        t.vx = dir * speed;
        // Start on the half opposite to the walking direction so the target
        // crosses at least half the frame.
        const double room_x = std::max(0.0, cfg_.width - t.w - 1.0);
        t.x0 = dir > 0 ? uniform(rng, 0.0, room_x / 2) : uniform(rng, room_x / 2, room_x);
        const double room_y = std::max(0.0, cfg_.height - t.h - 1.0);
        t.y0 = uniform(rng, 0.0, room_y);
        const double toward_center = t.y0 < room_y / 2 ? 1.0 : -1.0;
        t.vy = toward_center * uniform(rng, 0.0, cfg_.vertical_drift) * speed;
        t.age = 0;
        t.jx = 0;
        t.jy = 0;
        t.look = random_look(rng, t.h, Shape::pedestrian);
    }

    void spawn(Distractor& d)
    {
        auto& rng = distractor_rng_;
        const double lh = uniform(rng, std::log(static_cast<double>(cfg_.min_target_h)),
                                  std::log(static_cast<double>(cfg_.max_target_h)));
        d.h = static_cast<int>(std::lround(std::exp(lh)));
        d.w = std::max(2, static_cast<int>(std::lround(d.h * uniform(rng, 0.4, 0.6))));
        d.x = uniform_int(rng, 0, std::max(0, cfg_.width - d.w));
        d.y = uniform_int(rng, 0, std::max(0, cfg_.height - d.h));
        d.life = uniform_int(rng, cfg_.distractor_min_life, cfg_.distractor_max_life);
        static constexpr Shape shapes[] = {Shape::pedestrian, Shape::block, Shape::ellipse, Shape::headless};
        d.look = random_look(rng, d.h, shapes[rng() % 4]);
    }

    const SynthConfig& cfg_;
    std::mt19937_64 targets_rng_;
    std::mt19937_64 distractor_rng_;
    std::vector<double> background_;
    std::vector<Target> targets_;
    std::vector<Distractor> distractors_;
};

ImageSequence simulate(const SynthConfig& cfg, int total_frames, int frame_stride)
{
    Simulation sim(cfg);
    ImageSequence seq;
    seq.fps = frame_stride == 1 ? cfg.fps : cfg.fps / frame_stride;
    for (int f = 0; f < total_frames; ++f) {
        if (f > 0) {
            sim.step();
        }
        if (f % frame_stride == 0) {
            const auto first_ann = seq.annotations.size();
            sim.render(f, seq);
            for (auto i = first_ann; i < seq.annotations.size(); ++i) {
                seq.annotations[i].frame_index = f / frame_stride;
            }
        }
    }
    return seq;
}

}  // namespace

std::string_view to_string(Texture texture) { return texture == Texture::bar_pattern ? "bar_pattern" : "checker"; }

Texture parse_texture(std::string_view text)
{
    if (text == "bar_pattern") {
        return Texture::bar_pattern;
    }
    if (text == "checker") {
        return Texture::checker;
    }
    throw UsageError("unknown texture '" + std::string(text) + "'");
}

void SynthConfig::validate() const
{
    if (frames < 1 || width < 8 || height < 8 || !(fps > 0.0)) {
        throw UsageError("synth needs frames >= 1, a frame of at least 8x8 and fps > 0");
    }
    if (n_targets < 0 || distractors < 0) {
        throw UsageError("target and distractor counts must be >= 0");
    }
    if (min_target_h < 2 || max_target_h < min_target_h) {
        throw UsageError("bad target height range");
    }
    if (max_target_h > height || (max_target_h + 1) / 2 > width) {
        throw DataError("target larger than frame");
    }
    if (min_speed < 0.0 || max_speed < min_speed || jitter < 0.0 || noise_sigma < 0.0 || vertical_drift < 0.0) {
        throw UsageError("bad speed, jitter or noise settings");
    }
    if (distractor_min_life < 1 || distractor_max_life < distractor_min_life) {
        throw UsageError("bad distractor lifetime range");
    }
}

ImageSequence generate(const SynthConfig& cfg, int frame_stride)
{
    cfg.validate();
    if (frame_stride < 1) {
        throw UsageError("frame_stride must be >= 1");
    }
    return simulate(cfg, cfg.frames, frame_stride);
}

SynthSplit generate_split(const SynthConfig& cfg, int train_frames, int gap_frames, int test_frames, int frame_stride)
{
    cfg.validate();
    if (train_frames < 1 || test_frames < 1 || gap_frames < 0 || frame_stride < 1) {
        throw UsageError("bad split sizes");
    }
    const int total = train_frames + gap_frames + test_frames;
    const auto all = simulate(cfg, total * frame_stride, frame_stride);
    return {slice(all, 0, train_frames), slice(all, train_frames + gap_frames, total)};
}

}  // namespace sslped
