#include "sslped/evaluation.hpp"

#include "sslped/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <tuple>

namespace sslped {

std::string_view to_string(Subset subset)
{
    switch (subset) {
    case Subset::near:
        return "near";
    case Subset::medium:
        return "medium";
    case Subset::reasonable:
        return "reasonable";
    }
    return "?";
}

Subset parse_subset(std::string_view text)
{
    if (text == "near") {
        return Subset::near;
    }
    if (text == "medium") {
        return Subset::medium;
    }
    if (text == "reasonable") {
        return Subset::reasonable;
    }
    throw UsageError("unknown subset '" + std::string(text) + "'");
}

void EvalConfig::validate() const
{
    if (!(iou_match > 0.0 && iou_match < 1.0)) {
        throw UsageError("iou_match must be in (0, 1)");
    }
    if (!(fppi_min > 0.0 && fppi_min < fppi_max) || fppi_samples < 1) {
        throw UsageError("bad FPPI sampling range");
    }
    if (height_margin < 0.0) {
        throw UsageError("height_margin must be >= 0");
    }
}

HeightBand height_band(Subset subset)
{
    constexpr double inf = std::numeric_limits<double>::infinity();
    switch (subset) {
    case Subset::near:
        return {75.0, inf};
    case Subset::medium:
        return {50.0, 75.0};
    case Subset::reasonable:
        return {50.0, inf};
    }
    return {0.0, inf};
}

std::vector<Annotation> select_subset(const std::vector<Annotation>& annotations, Subset subset)
{
    const auto band = height_band(subset);
    std::vector<Annotation> out = annotations;
    for (auto& a : out) {
        const bool in_band = a.bbox.h >= band.min_h && a.bbox.h < band.max_h;
        if (a.label != Label::pedestrian || a.occluded || !in_band) {
            a.label = Label::ignore;
        }
    }
    return out;
}

FrameMatch match_frame(const std::vector<Detection>& detections, const std::vector<BBox>& ground_truth,
                       const std::vector<BBox>& ignores, double iou_threshold)
{
    std::vector<std::size_t> order(detections.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& da = detections[a];
        const auto& db = detections[b];
        return std::tuple(-da.score, da.bbox.x, da.bbox.y, da.bbox.w, da.bbox.h, a) <
               std::tuple(-db.score, db.bbox.x, db.bbox.y, db.bbox.w, db.bbox.h, b);
    });
    FrameMatch m;
    m.outcomes.assign(detections.size(), MatchOutcome::false_positive);
    std::vector<bool> taken(ground_truth.size(), false);
    for (std::size_t idx : order) {
        const auto& box = detections[idx].bbox;
        double best = iou_threshold;
        std::ptrdiff_t best_gt = -1;
        for (std::size_t g = 0; g < ground_truth.size(); ++g) {
            if (taken[g]) {
                continue;
            }
            const double o = iou(box, ground_truth[g]);
            if (o > best || (o == best && best_gt < 0)) {
                best = o;
                best_gt = static_cast<std::ptrdiff_t>(g);
            }
        }
        if (best_gt >= 0) {
            taken[static_cast<std::size_t>(best_gt)] = true;
            m.outcomes[idx] = MatchOutcome::true_positive;
            ++m.tp;
            continue;
        }
        const bool on_ignore = std::any_of(ignores.begin(), ignores.end(),
                                           [&](const BBox& ig) { return iou(box, ig) >= iou_threshold; });
        if (on_ignore) {
            m.outcomes[idx] = MatchOutcome::ignored;
        } else {
            ++m.fp;
        }
    }
    m.fn = static_cast<int>(std::count(taken.begin(), taken.end(), false));
    return m;
}

std::vector<CurvePoint> curve(const std::vector<Detection>& detections, const std::vector<Annotation>& annotations,
                              int frame_count, const EvalConfig& cfg)
{
    cfg.validate();
    if (frame_count < 1) {
        throw DataError("evaluation needs at least one frame");
    }
    const auto subset = select_subset(annotations, cfg.subset);
    std::vector<std::vector<BBox>> gts(static_cast<std::size_t>(frame_count));
    std::vector<std::vector<BBox>> ignores(static_cast<std::size_t>(frame_count));
    int total = 0;
    for (const auto& a : subset) {
        if (a.frame_index < 0 || a.frame_index >= frame_count) {
            throw DataError("annotation outside the evaluated frames");
        }
        if (a.label == Label::pedestrian) {
            gts[static_cast<std::size_t>(a.frame_index)].push_back(a.bbox);
            ++total;
        } else {
            ignores[static_cast<std::size_t>(a.frame_index)].push_back(a.bbox);
        }
    }
    if (total == 0) {
        throw DataError("no ground truth in subset '" + std::string(to_string(cfg.subset)) + "'");
    }
    const auto band = height_band(cfg.subset);
    const double lo = band.min_h / (1.0 + cfg.height_margin);
    const double hi = band.max_h * (1.0 + cfg.height_margin);
    std::vector<std::vector<Detection>> per_frame(static_cast<std::size_t>(frame_count));
    for (const auto& d : detections) {
        if (d.frame_index < 0 || d.frame_index >= frame_count) {
            throw DataError("detection outside the evaluated frames");
        }
        if (d.bbox.h < lo || d.bbox.h >= hi) {
            continue;
        }
        per_frame[static_cast<std::size_t>(d.frame_index)].push_back(d);
    }
    std::vector<std::pair<double, bool>> scored;  // (score, is_tp)
    for (std::size_t f = 0; f < per_frame.size(); ++f) {
        const auto m = match_frame(per_frame[f], gts[f], ignores[f], cfg.iou_match);
        for (std::size_t i = 0; i < per_frame[f].size(); ++i) {
            if (m.outcomes[i] != MatchOutcome::ignored) {
                scored.emplace_back(per_frame[f][i].score, m.outcomes[i] == MatchOutcome::true_positive);
            }
        }
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<CurvePoint> points;
    int tp = 0;
    int fp = 0;
    for (std::size_t i = 0; i < scored.size();) {
        const double threshold = scored[i].first;
        for (; i < scored.size() && scored[i].first == threshold; ++i) {
            (scored[i].second ? tp : fp) += 1;
        }
        CurvePoint p;
        p.threshold = threshold;
        p.tp = tp;
        p.fp = fp;
        p.fn = total - tp;
        p.fppi = static_cast<double>(fp) / frame_count;
        p.miss_rate = static_cast<double>(p.fn) / total;
        points.push_back(p);
    }
    return points;
}

double log_average_miss_rate(const std::vector<CurvePoint>& points, const EvalConfig& cfg)
{
    if (points.empty()) {
        return 100.0;
    }
    const double a = std::log10(cfg.fppi_min);
    const double b = std::log10(cfg.fppi_max);
    double sum = 0.0;
    for (int i = 0; i < cfg.fppi_samples; ++i) {
        const double t = cfg.fppi_samples == 1 ? 0.0 : static_cast<double>(i) / (cfg.fppi_samples - 1);
        const double sample = std::pow(10.0, a + t * (b - a)) * (1.0 + 1e-12);
        double miss = points.front().miss_rate;
        for (const auto& p : points) {
            if (p.fppi <= sample) {
                miss = p.miss_rate;
            } else {
                break;
            }
        }
        sum += miss;
    }
    return 100.0 * sum / cfg.fppi_samples;
}

EvalResult evaluate(const std::vector<Detection>& detections, const std::vector<Annotation>& annotations,
                    int frame_count, const EvalConfig& cfg)
{
    EvalResult r;
    r.points = curve(detections, annotations, frame_count, cfg);
    r.lamr = log_average_miss_rate(r.points, cfg);
    for (const auto& a : select_subset(annotations, cfg.subset)) {
        r.ground_truth += a.label == Label::pedestrian ? 1 : 0;
    }
    return r;
}

void write_curve_csv(const std::filesystem::path& path, const std::vector<CurvePoint>& points)
{
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out << "threshold,fppi,miss_rate\n";
    char buf[128];
    for (const auto& p : points) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", p.threshold, p.fppi, p.miss_rate);
        out << buf;
    }
}

std::vector<CurvePoint> read_curve_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    std::string line;
    std::getline(in, line);
    if (line.rfind("threshold,fppi,miss_rate", 0) != 0) {
        throw DataError(path.string() + ": bad curve header");
    }
    std::vector<CurvePoint> out;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        CurvePoint p;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &p.threshold, &p.fppi, &p.miss_rate) != 3) {
            throw DataError(path.string() + ": malformed curve line");
        }
        out.push_back(p);
    }
    return out;
}

std::string render_svg(const std::vector<NamedCurve>& curves, const EvalConfig& cfg)
{
    constexpr double width = 640;
    constexpr double height = 480;
    constexpr double left = 70;
    constexpr double right = 170;
    constexpr double top = 20;
    constexpr double bottom = 50;
    const double x_lo = std::log10(cfg.fppi_min) - 1.0;
    const double x_hi = std::log10(cfg.fppi_max) + 1.0;
    const auto px = [&](double fppi) {
        const double lx = std::clamp(std::log10(std::max(fppi, 1e-300)), x_lo, x_hi);
        return left + (lx - x_lo) / (x_hi - x_lo) * (width - left - right);
    };
    const auto py = [&](double miss) { return top + (1.0 - std::clamp(miss, 0.0, 1.0)) * (height - top - bottom); };
    static constexpr std::array<const char*, 6> colors = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << width - left - right << "\" height=\""
      << height - top - bottom << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int e = static_cast<int>(std::ceil(x_lo)); e <= static_cast<int>(std::floor(x_hi)); ++e) {
        const double x = px(std::pow(10.0, e));
        s << "<line x1=\"" << x << "\" y1=\"" << top << "\" x2=\"" << x << "\" y2=\"" << height - bottom
          << "\" stroke=\"#ddd\"/>\n";
        s << "<text x=\"" << x << "\" y=\"" << height - bottom + 18 << "\" font-size=\"12\" text-anchor=\"middle\">1e"
          << e << "</text>\n";
    }
    for (int i = 0; i <= 10; i += 2) {
        const double y = py(i / 10.0);
        s << "<text x=\"" << left - 8 << "\" y=\"" << y + 4 << "\" font-size=\"12\" text-anchor=\"end\">" << i / 10.0
          << "</text>\n";
    }
    s << "<text x=\"" << (left + width - right) / 2 << "\" y=\"" << height - 10
      << "\" font-size=\"13\" text-anchor=\"middle\">false positives per image</text>\n";
    s << "<text x=\"16\" y=\"" << (top + height - bottom) / 2 << "\" font-size=\"13\" transform=\"rotate(-90 16 "
      << (top + height - bottom) / 2 << ")\" text-anchor=\"middle\">miss rate</text>\n";
    for (std::size_t c = 0; c < curves.size(); ++c) {
        const auto* color = colors[c % colors.size()];
        s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        double prev_miss = 1.0;
        s << px(std::pow(10.0, x_lo)) << ',' << py(prev_miss) << ' ';
        for (const auto& p : curves[c].points) {
            s << px(p.fppi) << ',' << py(prev_miss) << ' ' << px(p.fppi) << ',' << py(p.miss_rate) << ' ';
            prev_miss = p.miss_rate;
        }
        s << "\"/>\n";
        const double ly = top + 20 + 20.0 * static_cast<double>(c);
        s << "<line x1=\"" << width - right + 10 << "\" y1=\"" << ly << "\" x2=\"" << width - right + 30 << "\" y2=\""
          << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        s << "<text x=\"" << width - right + 35 << "\" y=\"" << ly + 4 << "\" font-size=\"12\">" << curves[c].name
          << " (" << std::fixed;
        s.precision(2);
        s << log_average_miss_rate(curves[c].points, cfg) << "%)</text>\n";
        s.unsetf(std::ios::fixed);
        s.precision(6);
    }
    s << "</svg>\n";
    return s.str();
}

}  // namespace sslped
