// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 when any
// criterion fails. Tolerances are fixed below.

#include "sslped/errors.hpp"
#include "sslped/experiment.hpp"
#include "sslped/features.hpp"
#include "sslped/linear_svm.hpp"
#include "sslped/model.hpp"
#include "sslped/run_config.hpp"

#include "oracles.hpp"
#include "test_util.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <map>
#include <random>
#include <string>

using namespace sslped;

namespace {

// Benchmark size and seeds.
constexpr int kTrainFrames = 600;
constexpr int kTestFrames = 300;
constexpr std::uint64_t kSeeds[] = {1, 2, 3};
constexpr int kStrides[] = {1, 3, 10};  // 30, 10 and 3 fps

// Pinned tolerances.
constexpr double kMinMeanGain = 3.0;         // criterion 1, LAMR points
constexpr double kSeedBudgetSeconds = 1200;  // criterion 1, base + SSL per seed
constexpr double kFlowSlack = 0.5;           // criterion 4, LAMR points
constexpr double kRateTol = 1e-12;           // criterion 5
constexpr double kGradRelTol = 1e-4;         // criterion 7
constexpr double kMaxCandidateRatio = 0.05;  // criterion 10

std::map<int, std::pair<bool, std::string>> results;

void report(int id, bool pass, const std::string& name, const std::string& detail)
{
    results[id] = {pass, name + ": " + detail};
    std::printf("  [%d %s]\n", id, pass ? "pass" : "fail");
    std::fflush(stdout);
}

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, format, a, b, c);
    return buf;
}

double gain(const ExperimentResult& r, Subset s, const char* ssl = "ssl_proj")
{
    return r.find("base").lamr_of(s) - r.find(ssl).lamr_of(s);
}

// ---- criteria 1-4 and 10: the synthetic benchmark --------------------------

struct SeedRuns {
    std::map<int, ExperimentResult> by_stride;
    double seconds_base_ssl = 0.0;
};

std::map<std::uint64_t, SeedRuns> run_benchmark()
{
    std::map<std::uint64_t, SeedRuns> out;
    const auto all = standard_variants();
    const auto pick = [&](std::initializer_list<const char*> names) {
        std::vector<Variant> v;
        for (const auto* n : names) {
            for (const auto& a : all) {
                if (a.name == n) {
                    v.push_back(a);
                }
            }
        }
        return v;
    };
    for (auto seed : kSeeds) {
        RunConfig cfg;
        cfg.synth.seed = seed;
        cfg.split.train_frames = kTrainFrames;
        cfg.split.test_frames = kTestFrames;
        for (int stride : kStrides) {
            const auto variants = stride == 1 ? pick({"base", "ssl_proj", "ssl_flow"}) : pick({"base", "ssl_proj"});
            const auto t0 = std::chrono::steady_clock::now();
            auto r = run_experiment(cfg, variants, stride);
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            std::printf("seed %llu fps %-4g", static_cast<unsigned long long>(seed), r.fps);
            for (const auto& v : r.variants) {
                std::printf("  %s near/medium/reasonable %.2f/%.2f/%.2f", v.variant.name.c_str(),
                            v.lamr_of(Subset::near), v.lamr_of(Subset::medium), v.lamr_of(Subset::reasonable));
            }
            std::printf("  (%.0f s)\n", secs);
            std::fflush(stdout);
            if (stride == 1) {
                out[seed].seconds_base_ssl = r.find("ssl_proj").seconds;
            }
            out[seed].by_stride.emplace(stride, std::move(r));
        }
    }
    return out;
}

void benchmark_criteria()
{
    const auto runs = run_benchmark();
    const double n = static_cast<double>(std::size(kSeeds));

    // 1. Strict improvement per seed, mean gain, runtime.
    bool every_seed = true;
    bool in_budget = true;
    double mean_gain = 0.0;
    double slowest = 0.0;
    for (const auto& [seed, r] : runs) {
        const double g = gain(r.by_stride.at(1), Subset::reasonable);
        every_seed = every_seed && g > 0.0;
        mean_gain += g / n;
        slowest = std::max(slowest, r.seconds_base_ssl);
        in_budget = in_budget && r.seconds_base_ssl < kSeedBudgetSeconds;
    }
    report(1, every_seed && mean_gain >= kMinMeanGain && in_budget, "SSL improvement",
           fmt("mean reasonable gain %.3f (need >= 3, every seed > 0: ", mean_gain) + (every_seed ? "yes" : "no") +
               fmt("), slowest seed %.0f s (budget %.0f s)", slowest, kSeedBudgetSeconds));

    // 2. Mean gain non-increasing as the frame rate drops.
    std::vector<double> by_rate;
    for (int stride : kStrides) {
        double g = 0.0;
        for (const auto& [seed, r] : runs) {
            g += gain(r.by_stride.at(stride), Subset::reasonable) / n;
        }
        by_rate.push_back(g);
    }
    report(2, by_rate[0] >= by_rate[1] && by_rate[1] >= by_rate[2], "frame-rate trend",
           fmt("mean reasonable gain at 30/10/3 fps = %.3f / %.3f / %.3f", by_rate[0], by_rate[1], by_rate[2]));

    // 3. Near gain >= medium gain.
    double near = 0.0;
    double medium = 0.0;
    for (const auto& [seed, r] : runs) {
        near += gain(r.by_stride.at(1), Subset::near) / n;
        medium += gain(r.by_stride.at(1), Subset::medium) / n;
    }
    report(3, near >= medium, "near vs medium", fmt("mean gain near %.3f, medium %.3f", near, medium));

    // 4. Flow volumes no worse than projection + slack.
    double flow = 0.0;
    double proj = 0.0;
    for (const auto& [seed, r] : runs) {
        flow += r.by_stride.at(1).find("ssl_flow").lamr_of(Subset::reasonable) / n;
        proj += r.by_stride.at(1).find("ssl_proj").lamr_of(Subset::reasonable) / n;
    }
    report(4, flow <= proj + kFlowSlack, "flow vs projection",
           fmt("mean reasonable LAMR flow %.3f, projection %.3f, slack %.1f", flow, proj, kFlowSlack));

    // 10. Stage-1 candidates over scored windows, default thresholds.
    std::size_t scored = 0;
    std::size_t candidates = 0;
    for (const auto& [seed, r] : runs) {
        const auto& s = r.by_stride.at(1).find("ssl_proj").stats;
        scored += s.scored_windows;
        candidates += s.stage1_candidates;
    }
    const double ratio = static_cast<double>(candidates) / static_cast<double>(scored);
    report(10, ratio <= kMaxCandidateRatio, "pipeline ratio",
           fmt("%.0f stage-2 candidates / %.0f scored windows = %.5f", static_cast<double>(candidates),
               static_cast<double>(scored), ratio));
}

// ---- 5: evaluation oracle -------------------------------------------------

void evaluation_criterion()
{
    std::mt19937_64 rng(505);
    std::uniform_int_distribution<int> pos(0, 60);
    std::uniform_int_distribution<int> height(30, 130);
    std::uniform_int_distribution<int> n_gt(0, 3);
    std::uniform_int_distribution<int> n_det(0, 5);
    std::uniform_int_distribution<int> score(0, 8);
    int scenes = 0;
    int mismatches = 0;
    while (scenes < 200) {
        const int frames = 1 + static_cast<int>(rng() % 5);
        std::vector<Annotation> anns;
        std::vector<Detection> dets;
        for (int f = 0; f < frames; ++f) {
            for (int g = n_gt(rng); g > 0; --g) {
                const int h = height(rng);
                anns.push_back({f, {pos(rng), pos(rng), h / 2, h},
                                rng() % 8 == 0 ? Label::ignore : Label::pedestrian, rng() % 6 == 0});
            }
            for (int d = n_det(rng); d > 0; --d) {
                const int h = height(rng);
                dets.push_back({f, {pos(rng), pos(rng), h / 2, h}, score(rng) / 2.0, Stage::final});
            }
        }
        EvalConfig cfg;
        cfg.subset = static_cast<Subset>(rng() % 3);
        const auto sel = select_subset(anns, cfg.subset);
        if (std::none_of(sel.begin(), sel.end(), [](const Annotation& a) { return a.label == Label::pedestrian; })) {
            continue;
        }
        ++scenes;
        const auto got = curve(dets, anns, frames, cfg);
        const auto want = oracle::curve(dets, anns, frames, cfg);
        bool same = got.size() == want.size();
        for (std::size_t i = 0; same && i < got.size(); ++i) {
            same = got[i].tp == want[i].tp && got[i].fp == want[i].fp && got[i].fn == want[i].fn &&
                   got[i].threshold == want[i].threshold && std::abs(got[i].fppi - want[i].fppi) <= kRateTol &&
                   std::abs(got[i].miss_rate - want[i].miss_rate) <= kRateTol;
        }
        mismatches += same ? 0 : 1;
    }
    report(5, mismatches == 0, "evaluation oracle",
           fmt("%.0f micro-scenes, %.0f mismatches", scenes, mismatches));
}

// ---- 6: NMS oracle -----------------------------------------------------------

void nms_criterion()
{
    std::mt19937_64 rng(606);
    std::uniform_int_distribution<int> pos(0, 80);
    std::uniform_int_distribution<int> size(8, 40);
    std::uniform_int_distribution<int> score(0, 12);
    const int cases = 2000;
    int bad = 0;
    for (int c = 0; c < cases; ++c) {
        std::vector<Detection> dets;
        const int n = static_cast<int>(rng() % 21);
        for (int i = 0; i < n; ++i) {
            dets.push_back({0, {pos(rng), pos(rng), size(rng), size(rng)}, score(rng) / 3.0, Stage::stage1});
        }
        const double thr = 0.3 + 0.05 * (c % 9);
        const auto got = nms(dets, thr);
        bool ok = got == oracle::nms(dets, thr) && nms(got, thr) == got;
        for (std::size_t i = 0; i < got.size(); ++i) {
            for (std::size_t j = i + 1; j < got.size(); ++j) {
                ok = ok && iou(got[i].bbox, got[j].bbox) < thr;
            }
        }
        bad += ok ? 0 : 1;
    }
    report(6, bad == 0, "NMS oracle", fmt("%.0f random sets, %.0f failures", cases, bad));
}

// ---- 7: SVM ----------------------------------------------------------------

void svm_criterion()
{
    std::mt19937_64 rng(707);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    std::normal_distribution<double> g(0.0, 1.0);

    int sets = 0;
    int inaccurate = 0;
    while (sets < 50) {
        const double angle = u(rng);
        const double nx = std::cos(angle);
        const double ny = std::sin(angle);
        const double offset = u(rng) / 5.0;
        TrainSet set;
        while (set.size() < 80) {
            const double x = u(rng);
            const double y = u(rng);
            const double d = nx * x + ny * y + offset;
            if (std::abs(d) >= 1.0) {
                set.add({{static_cast<float>(x), static_cast<float>(y)}, 1}, d > 0 ? 1 : -1);
            }
        }
        if (set.count(1) == 0 || set.count(-1) == 0) {
            continue;
        }
        ++sets;
        SvmConfig cfg;
        cfg.lambda = 1e-3;
        cfg.epochs = 200;
        const auto m = train(set, cfg);
        for (std::size_t i = 0; i < set.size(); ++i) {
            if ((score(m, set.samples[i]) > 0 ? 1 : -1) != set.labels[i]) {
                ++inaccurate;
                break;
            }
        }
    }

    TrainSet data;
    for (int i = 0; i < 100; ++i) {
        std::vector<float> v(6);
        for (auto& x : v) {
            x = static_cast<float>(g(rng));
        }
        data.add({v, 1}, v[0] - v[2] + 0.5 * g(rng) > 0 ? 1 : -1);
    }
    const double lambda = 0.01;
    int points = 0;
    int grad_bad = 0;
    double worst = 0.0;
    while (points < 100) {
        std::vector<double> w(6);
        for (auto& x : w) {
            x = g(rng);
        }
        const double b = g(rng);
        bool margin = false;
        for (std::size_t i = 0; i < data.size(); ++i) {
            double s = b;
            for (std::size_t k = 0; k < w.size(); ++k) {
                s += w[k] * data.samples[i].values[k];
            }
            margin = margin || std::abs(1.0 - data.labels[i] * s) < 1e-3;
        }
        if (margin) {
            continue;
        }
        ++points;
        std::vector<double> gw;
        double gb = 0.0;
        subgradient(w, b, data, lambda, gw, gb);
        const double h = 1e-6;
        bool ok = true;
        for (std::size_t k = 0; k <= w.size(); ++k) {
            auto wp = w;
            auto wm = w;
            double bp = b;
            double bm = b;
            (k < w.size() ? wp[k] : bp) += h;
            (k < w.size() ? wm[k] : bm) -= h;
            const double fd = (oracle::objective(wp, bp, data, lambda) - oracle::objective(wm, bm, data, lambda)) / (2 * h);
            const double an = k < w.size() ? gw[k] : gb;
            const double rel = std::abs(fd - an) / std::max(1.0, std::abs(an));
            worst = std::max(worst, rel);
            ok = ok && rel <= kGradRelTol;
        }
        grad_bad += ok ? 0 : 1;
    }

    SvmConfig cfg;
    cfg.seed = 4242;
    const auto a = train(data, cfg);
    const auto b = train(data, cfg);
    const bool exact = a.weights.size() == b.weights.size() &&
                       std::memcmp(a.weights.data(), b.weights.data(), a.weights.size() * sizeof(double)) == 0 &&
                       std::memcmp(&a.bias, &b.bias, sizeof(double)) == 0;

    report(7, inaccurate == 0 && grad_bad == 0 && exact, "SVM correctness",
           fmt("%.0f separable sets not fit exactly, %.0f of 100 gradient points off (worst rel %.2e), ",
               inaccurate, grad_bad, worst) +
               (exact ? "seed-deterministic" : "NOT seed-deterministic"));
}

// ---- 8: augmented dimensionality ------------------------------------------

void augmentation_criterion()
{
    std::mt19937_64 rng(808);
    std::uniform_int_distribution<int> extent(0, 6);
    std::uniform_int_distribution<int> depth(1, 9);
    int bad = 0;
    for (int i = 0; i < 50; ++i) {
        ChannelConfig ch;
        ch.flow_hist = rng() % 2 == 0;
        ch.lbp_hist = rng() % 3 != 0;
        NeighborhoodSpec spec;
        spec.nx = extent(rng);
        spec.ny = extent(rng);
        spec.T = depth(rng);
        spec.style = static_cast<TemporalStyle>(rng() % 2);  // past or future, any T
        AugmentedSample s;
        s.base_descriptor.values.assign(ch.descriptor_length(), 0.0F);
        s.neighbor_scores.assign(spec.score_count(), 0.0);
        const auto d = augmented_descriptor(s, ssl_layout_id(ch, spec));
        const auto want = ch.descriptor_length() + static_cast<std::size_t>((2 * spec.nx + 1) * (2 * spec.ny + 1) * spec.T);
        bad += d.values.size() == want && expected_length(ModelKind::ssl, ch, spec) == want ? 0 : 1;
    }
    report(8, bad == 0, "augmentation length", fmt("50 random neighborhoods, %.0f mismatches", bad));
}

// ---- 9: flow recovery --------------------------------------------------------

void flow_criterion()
{
    std::mt19937_64 rng(909);
    std::uniform_int_distribution<int> shift(-3, 3);
    constexpr int block = 8;
    constexpr int radius = 3;
    int wrong = 0;
    int blocks = 0;
    for (int t = 0; t < 20; ++t) {
        // Texture: smoothed random noise at a random scale, so not all pixels are independent.
        const auto noise = testutil::random_frame(rng, 0, 96, 80);
        const int smooth = static_cast<int>(rng() % 3);
        Frame prev(0, 96, 80);
        for (int y = 0; y < 80; ++y) {
            for (int x = 0; x < 96; ++x) {
                int sum = 0;
                int n = 0;
                for (int dy = -smooth; dy <= smooth; ++dy) {
                    for (int dx = -smooth; dx <= smooth; ++dx) {
                        sum += noise.at(std::clamp(x + dx, 0, 95), std::clamp(y + dy, 0, 79));
                        ++n;
                    }
                }
                prev.at(x, y) = static_cast<std::uint8_t>(sum / n);
            }
        }
        const int du = shift(rng);
        const int dv = shift(rng);
        const auto curr = oracle::shifted(prev, du, dv);
        const auto flow = compute_flow(prev, curr, block, radius);
        // Interior: the block and every candidate displacement stay inside the frame.
        for (int r = 0; r < flow.rows; ++r) {
            for (int c = 0; c < flow.cols; ++c) {
                const int x = c * block;
                const int y = r * block;
                if (x - radius < 0 || y - radius < 0 || x + block + radius > 96 || y + block + radius > 80) {
                    continue;
                }
                ++blocks;
                wrong += flow.u_at(r, c) == static_cast<float>(du) && flow.v_at(r, c) == static_cast<float>(dv) ? 0 : 1;
            }
        }
    }
    report(9, wrong == 0 && blocks > 0, "flow recovery",
           fmt("20 textures, %.0f interior blocks, %.0f wrong", blocks, wrong));
}

}  // namespace

int main()
{
    try {
        evaluation_criterion();
        nms_criterion();
        svm_criterion();
        augmentation_criterion();
        flow_criterion();
        benchmark_criteria();
    } catch (const std::exception& e) {
        std::printf("acceptance aborted: %s\n", e.what());
        return 2;
    }
    int failures = 0;
    for (const auto& [id, r] : results) {
        std::printf("criterion %2d %s  %s\n", id, r.first ? "PASS" : "FAIL", r.second.c_str());
        failures += r.first ? 0 : 1;
    }
    std::printf("%d of %zu criteria failed\n", failures, results.size());
    return failures == 0 ? 0 : 1;
}
