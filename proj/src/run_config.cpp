#include "sslped/run_config.hpp"

#include "sslped/errors.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

namespace sslped {

namespace {

std::string_view trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view text)
{
    T value{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end || text.empty()) {
        throw UsageError("bad number '" + std::string(text) + "'");
    }
    return value;
}

bool parse_bool(std::string_view text)
{
    if (text == "true" || text == "1") {
        return true;
    }
    if (text == "false" || text == "0") {
        return false;
    }
    throw UsageError("bad boolean '" + std::string(text) + "'");
}

std::string format_double(double v)
{
    // Shortest text that parses back to the same value.
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

struct Field {
    std::string section;
    std::string key;
    std::function<void(RunConfig&, std::string_view)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <typename T, typename Access>
Field number_field(std::string section, std::string key, Access access)
{
    return {std::move(section), std::move(key),
            [access](RunConfig& c, std::string_view v) { access(c) = parse_number<T>(v); },
            [access](const RunConfig& c) {
                const T v = access(const_cast<RunConfig&>(c));
                if constexpr (std::is_floating_point_v<T>) {
                    return format_double(v);
                } else {
                    return std::to_string(v);
                }
            }};
}

template <typename Access>
Field bool_field(std::string section, std::string key, Access access)
{
    return {std::move(section), std::move(key),
            [access](RunConfig& c, std::string_view v) { access(c) = parse_bool(v); },
            [access](const RunConfig& c) {
                return std::string(access(const_cast<RunConfig&>(c)) ? "true" : "false");
            }};
}

template <typename Access, typename Parse>
Field enum_field(std::string section, std::string key, Access access, Parse parse)
{
    return {std::move(section), std::move(key),
            [access, parse](RunConfig& c, std::string_view v) { access(c) = parse(v); },
            [access](const RunConfig& c) { return std::string(to_string(access(const_cast<RunConfig&>(c)))); }};
}

void add_bootstrap(std::vector<Field>& f, const std::string& s, BootstrapConfig SslTrainConfig::*member)
{
    const auto b = [member](RunConfig& c) -> BootstrapConfig& { return c.train.*member; };
    f.push_back(number_field<int>(s, "rounds", [b](RunConfig& c) -> int& { return b(c).rounds; }));
    f.push_back(number_field<int>(s, "neg_per_frame", [b](RunConfig& c) -> int& { return b(c).neg_per_frame; }));
    f.push_back(
        number_field<std::size_t>(s, "max_mined", [b](RunConfig& c) -> std::size_t& { return b(c).max_mined; }));
    f.push_back(number_field<double>(s, "mining_threshold",
                                     [b](RunConfig& c) -> double& { return b(c).mining_threshold; }));
    f.push_back(number_field<double>(s, "neg_max_iou", [b](RunConfig& c) -> double& { return b(c).neg_max_iou; }));
    f.push_back(number_field<double>(s, "pos_min_iou", [b](RunConfig& c) -> double& { return b(c).pos_min_iou; }));
    f.push_back(number_field<std::uint64_t>(s, "seed", [b](RunConfig& c) -> std::uint64_t& { return b(c).seed; }));
}

const std::vector<Field>& fields()
{
    static const std::vector<Field> table = [] {
        std::vector<Field> f;
#define SSLPED_REF(type, expr) [](RunConfig& c) -> type& { return c.expr; }
        f.push_back(bool_field("channels", "grad_hist", SSLPED_REF(bool, train.scan.channels.grad_hist)));
        f.push_back(bool_field("channels", "lbp_hist", SSLPED_REF(bool, train.scan.channels.lbp_hist)));
        f.push_back(bool_field("channels", "flow_hist", SSLPED_REF(bool, train.scan.channels.flow_hist)));
        f.push_back(number_field<int>("channels", "cell_size", SSLPED_REF(int, train.scan.channels.cell_size)));
        f.push_back(number_field<int>("channels", "window_w", SSLPED_REF(int, train.scan.channels.window_w)));
        f.push_back(number_field<int>("channels", "window_h", SSLPED_REF(int, train.scan.channels.window_h)));
        f.push_back(number_field<int>("pyramid", "scales_per_octave",
                                      SSLPED_REF(int, train.scan.pyramid.scales_per_octave)));
        f.push_back(number_field<int>("pyramid", "stride", SSLPED_REF(int, train.scan.pyramid.stride)));
        f.push_back(number_field<int>("flow", "block_size", SSLPED_REF(int, train.scan.flow_block)));
        f.push_back(number_field<int>("flow", "search_radius", SSLPED_REF(int, train.scan.flow_radius)));

        f.push_back(number_field<double>("svm", "lambda", SSLPED_REF(double, train.svm.lambda)));
        f.push_back(number_field<int>("svm", "epochs", SSLPED_REF(int, train.svm.epochs)));
        f.push_back(number_field<std::uint64_t>("svm", "seed", SSLPED_REF(std::uint64_t, train.svm.seed)));
        f.push_back(bool_field("svm", "average", SSLPED_REF(bool, train.svm.average)));
        f.push_back(number_field<double>("ssl_svm", "lambda", SSLPED_REF(double, train.ssl_svm.lambda)));
        f.push_back(number_field<int>("ssl_svm", "epochs", SSLPED_REF(int, train.ssl_svm.epochs)));
        f.push_back(number_field<std::uint64_t>("ssl_svm", "seed", SSLPED_REF(std::uint64_t, train.ssl_svm.seed)));
        f.push_back(bool_field("ssl_svm", "average", SSLPED_REF(bool, train.ssl_svm.average)));
        add_bootstrap(f, "bootstrap", &SslTrainConfig::bootstrap);
        add_bootstrap(f, "ssl_bootstrap", &SslTrainConfig::ssl_bootstrap);

        f.push_back(number_field<int>("neighborhood", "nx", SSLPED_REF(int, train.neighborhood.nx)));
        f.push_back(number_field<int>("neighborhood", "ny", SSLPED_REF(int, train.neighborhood.ny)));
        f.push_back(enum_field("neighborhood", "reading", SSLPED_REF(ExtentReading, extent_reading),
                               parse_extent_reading));
        f.push_back(number_field<int>("neighborhood", "step_x", SSLPED_REF(int, train.neighborhood.step_x)));
        f.push_back(number_field<int>("neighborhood", "step_y", SSLPED_REF(int, train.neighborhood.step_y)));
        f.push_back(number_field<int>("neighborhood", "T", SSLPED_REF(int, train.neighborhood.T)));
        f.push_back(enum_field("neighborhood", "style", SSLPED_REF(TemporalStyle, train.neighborhood.style),
                               parse_temporal_style));
        f.push_back(
            enum_field("neighborhood", "mode", SSLPED_REF(VolumeMode, train.neighborhood.mode), parse_volume_mode));
        f.push_back(number_field<int>("ssl", "K", SSLPED_REF(int, train.K)));

        f.push_back(number_field<double>("detector", "stage1_threshold",
                                         SSLPED_REF(double, train.detector.stage1_threshold)));
        f.push_back(number_field<double>("detector", "stage2_threshold",
                                         SSLPED_REF(double, train.detector.stage2_threshold)));
        f.push_back(number_field<double>("detector", "nms_iou", SSLPED_REF(double, train.detector.nms_iou)));
        f.push_back({"detector", "out_of_grid_score",
                     [](RunConfig& c, std::string_view v) {
                         if (v == "auto") {
                             c.train.detector.out_of_grid_score.reset();
                         } else {
                             c.train.detector.out_of_grid_score = parse_number<double>(v);
                         }
                     },
                     [](const RunConfig& c) {
                         const auto& v = c.train.detector.out_of_grid_score;
                         return v ? format_double(*v) : std::string("auto");
                     }});

        f.push_back(number_field<double>("eval", "iou_match", SSLPED_REF(double, eval.iou_match)));
        f.push_back(enum_field("eval", "subset", SSLPED_REF(Subset, eval.subset), parse_subset));
        f.push_back(number_field<double>("eval", "fppi_min", SSLPED_REF(double, eval.fppi_min)));
        f.push_back(number_field<double>("eval", "fppi_max", SSLPED_REF(double, eval.fppi_max)));
        f.push_back(number_field<int>("eval", "fppi_samples", SSLPED_REF(int, eval.fppi_samples)));
        f.push_back(number_field<double>("eval", "height_margin", SSLPED_REF(double, eval.height_margin)));

        f.push_back(number_field<std::uint64_t>("synth", "seed", SSLPED_REF(std::uint64_t, synth.seed)));
        f.push_back(number_field<int>("synth", "frames", SSLPED_REF(int, synth.frames)));
        f.push_back(number_field<int>("synth", "width", SSLPED_REF(int, synth.width)));
        f.push_back(number_field<int>("synth", "height", SSLPED_REF(int, synth.height)));
        f.push_back(number_field<double>("synth", "fps", SSLPED_REF(double, synth.fps)));
        f.push_back(number_field<int>("synth", "n_targets", SSLPED_REF(int, synth.n_targets)));
        f.push_back(number_field<int>("synth", "min_target_h", SSLPED_REF(int, synth.min_target_h)));
        f.push_back(number_field<int>("synth", "max_target_h", SSLPED_REF(int, synth.max_target_h)));
        f.push_back(number_field<double>("synth", "min_speed", SSLPED_REF(double, synth.min_speed)));
        f.push_back(number_field<double>("synth", "max_speed", SSLPED_REF(double, synth.max_speed)));
        f.push_back(number_field<double>("synth", "vertical_drift", SSLPED_REF(double, synth.vertical_drift)));
        f.push_back(number_field<double>("synth", "jitter", SSLPED_REF(double, synth.jitter)));
        f.push_back(enum_field("synth", "texture", SSLPED_REF(Texture, synth.texture), parse_texture));
        f.push_back(number_field<double>("synth", "noise_sigma", SSLPED_REF(double, synth.noise_sigma)));
        f.push_back(number_field<int>("synth", "distractors", SSLPED_REF(int, synth.distractors)));
        f.push_back(number_field<int>("synth", "distractor_min_life", SSLPED_REF(int, synth.distractor_min_life)));
        f.push_back(number_field<int>("synth", "distractor_max_life", SSLPED_REF(int, synth.distractor_max_life)));

        f.push_back(number_field<int>("split", "train_frames", SSLPED_REF(int, split.train_frames)));
        f.push_back(number_field<int>("split", "gap_frames", SSLPED_REF(int, split.gap_frames)));
        f.push_back(number_field<int>("split", "test_frames", SSLPED_REF(int, split.test_frames)));
#undef SSLPED_REF
        return f;
    }();
    return table;
}

}  // namespace

std::string_view to_string(ExtentReading reading)
{
    return reading == ExtentReading::per_side ? "per_side" : "grid";
}

ExtentReading parse_extent_reading(std::string_view text)
{
    if (text == "per_side") {
        return ExtentReading::per_side;
    }
    if (text == "grid") {
        return ExtentReading::grid;
    }
    throw UsageError("unknown extent reading '" + std::string(text) + "'");
}

SslTrainConfig RunConfig::training() const
{
    SslTrainConfig out = train;
    if (extent_reading == ExtentReading::grid) {
        auto& nb = out.neighborhood;
        if (nb.nx < 1 || nb.ny < 1 || nb.nx % 2 == 0 || nb.ny % 2 == 0) {
            throw UsageError("grid reading needs odd neighborhood.nx and neighborhood.ny");
        }
        nb.nx = (nb.nx - 1) / 2;
        nb.ny = (nb.ny - 1) / 2;
    }
    return out;
}

void RunConfig::validate() const
{
    const auto resolved = training();
    resolved.scan.validate();
    resolved.neighborhood.validate();
    eval.validate();
    synth.validate();
    if (train.K < 1) {
        throw UsageError("ssl.K must be >= 1");
    }
    for (const auto* svm : {&train.svm, &train.ssl_svm}) {
        if (!(svm->lambda > 0.0) || svm->epochs < 1) {
            throw UsageError("svm needs lambda > 0 and epochs >= 1");
        }
    }
    if (split.train_frames < 1 || split.test_frames < 1 || split.gap_frames < 0) {
        throw UsageError("bad split sizes");
    }
    if (!(train.detector.nms_iou > 0.0 && train.detector.nms_iou <= 1.0)) {
        throw UsageError("detector.nms_iou must be in (0, 1]");
    }
}

void set_value(RunConfig& cfg, std::string_view section, std::string_view key, std::string_view value)
{
    for (const auto& f : fields()) {
        if (f.section == section && f.key == key) {
            f.set(cfg, value);
            return;
        }
    }
    throw UsageError("unknown config key '" + std::string(section) + "." + std::string(key) + "'");
}

void apply_override(RunConfig& cfg, std::string_view assignment)
{
    const auto eq = assignment.find('=');
    const auto name = trim(assignment.substr(0, eq));
    const auto dot = name.find('.');
    if (eq == std::string_view::npos || dot == std::string_view::npos) {
        throw UsageError("override must look like section.key=value: '" + std::string(assignment) + "'");
    }
    set_value(cfg, name.substr(0, dot), name.substr(dot + 1), trim(assignment.substr(eq + 1)));
}

RunConfig parse_run_config(std::string_view text)
{
    RunConfig cfg;
    std::string section;
    int line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        auto line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto where = " (line " + std::to_string(line_no) + ")";
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw UsageError("unterminated section header" + where);
            }
            section = std::string(trim(line.substr(1, line.size() - 2)));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos || section.empty()) {
            throw UsageError("expected key = value inside a section" + where);
        }
        try {
            set_value(cfg, section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const UsageError& e) {
            throw UsageError(e.what() + where);
        }
    }
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw UsageError("cannot open config " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

std::string format_run_config(const RunConfig& cfg)
{
    std::string out;
    std::string section;
    for (const auto& f : fields()) {
        if (f.section != section) {
            out += (section.empty() ? "[" : "\n[") + f.section + "]\n";
            section = f.section;
        }
        out += f.key + " = " + f.get(cfg) + "\n";
    }
    return out;
}

}  // namespace sslped
