#include "sslped/errors.hpp"
#include "sslped/evaluation.hpp"

#include "oracles.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace sslped;

namespace {

Annotation ped(int frame, int x, int y, int h, bool occluded = false)
{
    return {frame, {x, y, h / 2, h}, Label::pedestrian, occluded};
}

Detection det(int frame, BBox b, double s) { return {frame, b, s, Stage::final}; }

}  // namespace

TEST_CASE("subset selection by height")
{
    const std::vector<Annotation> anns{ped(0, 0, 0, 40), ped(0, 0, 0, 60), ped(0, 0, 0, 80), ped(0, 0, 0, 75),
                                       ped(0, 0, 0, 90, true)};
    const auto labels = [&](Subset s) {
        std::vector<bool> out;
        for (const auto& a : select_subset(anns, s)) {
            out.push_back(a.label == Label::pedestrian);
        }
        return out;
    };
    CHECK(labels(Subset::near) == std::vector<bool>{false, false, true, true, false});
    CHECK(labels(Subset::medium) == std::vector<bool>{false, true, false, false, false});
    CHECK(labels(Subset::reasonable) == std::vector<bool>{false, true, true, true, false});
    CHECK(parse_subset("near") == Subset::near);
    CHECK_THROWS_AS(parse_subset("far"), UsageError);
}

TEST_CASE("frame matching examples")
{
    const BBox gt{0, 0, 50, 100};
    const BBox ig{200, 0, 50, 100};
    // Two detections on one pedestrian: the stronger one matches.
    const auto m = match_frame({det(0, {2, 2, 50, 100}, 0.5), det(0, gt, 0.9)}, {gt}, {}, 0.5);
    CHECK(m.tp == 1);
    CHECK(m.fp == 1);
    CHECK(m.fn == 0);
    CHECK(m.outcomes[1] == MatchOutcome::true_positive);
    CHECK(m.outcomes[0] == MatchOutcome::false_positive);

    // Detections on an ignore region are neither TP nor FP.
    const auto i = match_frame({det(0, ig, 0.9)}, {gt}, {ig}, 0.5);
    CHECK(i.tp == 0);
    CHECK(i.fp == 0);
    CHECK(i.fn == 1);
    CHECK(i.outcomes[0] == MatchOutcome::ignored);

    // A pedestrian takes precedence over an overlapping ignore region.
    const auto p = match_frame({det(0, gt, 0.2)}, {gt}, {gt}, 0.5);
    CHECK(p.tp == 1);

    const auto none = match_frame({}, {gt, ig}, {}, 0.5);
    CHECK(none.fn == 2);
}

TEST_CASE("frame matching does not depend on input order")
{
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> pos(0, 40);
    std::uniform_int_distribution<int> sc(0, 5);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<BBox> gt;
        for (int g = 0; g < 3; ++g) {
            gt.push_back({pos(rng), pos(rng), 25, 50});
        }
        std::vector<Detection> dets;
        for (int d = 0; d < 5; ++d) {
            dets.push_back(det(0, {pos(rng), pos(rng), 25, 50}, sc(rng)));
        }
        const auto a = match_frame(dets, gt, {}, 0.5);
        std::shuffle(dets.begin(), dets.end(), rng);
        const auto b = match_frame(dets, gt, {}, 0.5);
        CHECK(a.tp == b.tp);
        CHECK(a.fp == b.fp);
        CHECK(a.fn == b.fn);
        CHECK(a.tp + a.fn == 3);
    }
}

TEST_CASE("perfect and empty detectors")
{
    std::vector<Annotation> anns;
    std::vector<Detection> dets;
    for (int f = 0; f < 10; ++f) {
        anns.push_back(ped(f, 10 * f, 5, 100));
        dets.push_back(det(f, anns.back().bbox, 1.0 + f));
    }
    EvalConfig cfg;
    const auto perfect = evaluate(dets, anns, 10, cfg);
    CHECK(perfect.lamr == 0.0);
    for (const auto& p : perfect.points) {
        CHECK(p.fp == 0);
    }
    CHECK(perfect.points.back().miss_rate == 0.0);
    CHECK(evaluate({}, anns, 10, cfg).lamr == 100.0);

    cfg.subset = Subset::medium;
    CHECK_THROWS_AS(evaluate(dets, anns, 10, cfg), DataError);
}

TEST_CASE("hand-computed log-average miss rate")
{
    // Two pedestrians in 10 frames; hit, false positive, hit.
    const std::vector<Annotation> anns{ped(0, 0, 0, 100), ped(1, 0, 0, 100)};
    const std::vector<Detection> dets{det(0, {0, 0, 50, 100}, 0.9), det(2, {100, 0, 50, 100}, 0.8),
                                      det(1, {0, 0, 50, 100}, 0.7)};
    EvalConfig cfg;
    const auto r = evaluate(dets, anns, 10, cfg);
    REQUIRE(r.points.size() == 3);
    CHECK(r.points[0].miss_rate == 0.5);
    CHECK(r.points[1].fppi == doctest::Approx(0.1));
    CHECK(r.points[2].miss_rate == 0.0);
    // FPPI samples 10^-2 .. 10^-1.25 see 0.5, samples 10^-1 .. 10^0 see 0.
    CHECK(r.lamr == doctest::Approx(100.0 * 4 * 0.5 / 9).epsilon(1e-12));

    // No point at or below the lowest sample: the highest-threshold point is used.
    const std::vector<Detection> fp_first{det(2, {100, 0, 50, 100}, 0.9), det(0, {0, 0, 50, 100}, 0.5)};
    const auto q = evaluate(fp_first, anns, 10, cfg);
    CHECK(q.points.front().miss_rate == 1.0);
    CHECK(q.lamr == doctest::Approx(100.0 * (4 * 1.0 + 5 * 0.5) / 9).epsilon(1e-12));
}

TEST_CASE("curve matches an exhaustive-threshold oracle")
{
    std::mt19937_64 rng(41);
    std::uniform_int_distribution<int> pos(0, 60);
    std::uniform_int_distribution<int> height(30, 130);
    std::uniform_int_distribution<int> count(0, 3);
    std::uniform_int_distribution<int> dcount(0, 5);
    std::uniform_int_distribution<int> score(0, 8);
    int tested = 0;
    while (tested < 300) {
        const int frames = 1 + static_cast<int>(rng() % 5);
        std::vector<Annotation> anns;
        std::vector<Detection> dets;
        for (int f = 0; f < frames; ++f) {
            for (int g = count(rng); g > 0; --g) {
                auto a = ped(f, pos(rng), pos(rng), height(rng), rng() % 6 == 0);
                a.label = rng() % 8 == 0 ? Label::ignore : Label::pedestrian;
                anns.push_back(a);
            }
            for (int d = dcount(rng); d > 0; --d) {
                const int h = height(rng);
                dets.push_back(det(f, {pos(rng), pos(rng), h / 2, h}, score(rng) / 2.0));
            }
        }
        EvalConfig cfg;
        cfg.subset = static_cast<Subset>(rng() % 3);
        const auto selected = select_subset(anns, cfg.subset);
        if (std::none_of(selected.begin(), selected.end(),
                         [](const Annotation& a) { return a.label == Label::pedestrian; })) {
            CHECK_THROWS_AS(curve(dets, anns, frames, cfg), DataError);
            continue;
        }
        ++tested;
        const auto points = curve(dets, anns, frames, cfg);
        const auto expect = oracle::curve(dets, anns, frames, cfg);
        REQUIRE(points.size() == expect.size());
        for (std::size_t i = 0; i < points.size(); ++i) {
            CHECK(points[i].threshold == expect[i].threshold);
            CHECK(points[i].tp == expect[i].tp);
            CHECK(points[i].fp == expect[i].fp);
            CHECK(points[i].fn == expect[i].fn);
            CHECK(std::abs(points[i].fppi - expect[i].fppi) <= 1e-12);
            CHECK(std::abs(points[i].miss_rate - expect[i].miss_rate) <= 1e-12);
        }
        // Invariants: TP + FN constant, FPPI non-decreasing, LAMR in range.
        for (std::size_t i = 1; i < points.size(); ++i) {
            CHECK(points[i].tp + points[i].fn == points[0].tp + points[0].fn);
            CHECK(points[i].fppi >= points[i - 1].fppi);
            CHECK(points[i].miss_rate <= points[i - 1].miss_rate);
        }
        const double lamr = log_average_miss_rate(points, cfg);
        CHECK(lamr >= 0.0);
        CHECK(lamr <= 100.0);
    }
}

TEST_CASE("curve CSV round trip and SVG output")
{
    const auto dir = testutil::temp_dir("curve");
    std::vector<CurvePoint> pts(2);
    pts[0].threshold = 1.5;
    pts[0].fppi = 0.0;
    pts[0].miss_rate = 0.75;
    pts[1].threshold = -0.1234567890123;
    pts[1].fppi = 0.3;
    pts[1].miss_rate = 0.125;
    write_curve_csv(dir / "c.csv", pts);
    const auto back = read_curve_csv(dir / "c.csv");
    REQUIRE(back.size() == 2);
    CHECK(back[1].threshold == pts[1].threshold);
    CHECK(back[1].fppi == pts[1].fppi);
    CHECK(back[1].miss_rate == pts[1].miss_rate);

    const auto svg = render_svg({{"base", pts}, {"ssl", pts}}, {});
    CHECK(svg.find("<svg") == 0);
    CHECK(svg.find("base") != std::string::npos);
    CHECK(svg.find("ssl") != std::string::npos);
}
