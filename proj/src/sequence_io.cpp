#include "sslped/sequence_io.hpp"

#include "sslped/errors.hpp"
#include "sslped/model.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

namespace fs = std::filesystem;

namespace sslped {

namespace {

constexpr std::array<char, 8> kModelMagic = {'S', 'S', 'L', 'M', 'D', 'L', '0', '1'};
const char* const kCsvHeader = "frame_index,x,y,w,h,label,occluded";

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) {
        fields.push_back(field);
    }
    if (!line.empty() && line.back() == ',') {
        fields.emplace_back();
    }
    return fields;
}

std::string trim(std::string s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

int parse_int(const std::string& text, const std::string& what)
{
    int value = 0;
    const auto t = trim(text);
    const auto* end = t.data() + t.size();
    const auto res = std::from_chars(t.data(), end, value);
    if (res.ec != std::errc{} || res.ptr != end) {
        throw DataError("bad integer for " + what + ": '" + text + "'");
    }
    return value;
}

// Little-endian writer/reader for the model format.
class ByteWriter {
public:
    void bytes(const void* data, std::size_t n)
    {
        const auto* p = static_cast<const std::uint8_t*>(data);
        out_.insert(out_.end(), p, p + n);
    }
    void u32(std::uint32_t v)
    {
        for (int i = 0; i < 4; ++i) {
            out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
        }
    }
    void u64(std::uint64_t v)
    {
        for (int i = 0; i < 8; ++i) {
            out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
        }
    }
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    std::vector<std::uint8_t> out_;
};

class ByteReader {
public:
    explicit ByteReader(const std::vector<std::uint8_t>& in) : in_(in) {}

    void need(std::size_t n) const
    {
        if (pos_ + n > in_.size()) {
            throw DataError("model file truncated");
        }
    }
    std::uint32_t u32()
    {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(in_[pos_++]) << (8 * i);
        }
        return v;
    }
    std::uint64_t u64()
    {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(in_[pos_++]) << (8 * i);
        }
        return v;
    }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
    void bytes(void* out, std::size_t n)
    {
        need(n);
        std::memcpy(out, in_.data() + pos_, n);
        pos_ += n;
    }
    [[nodiscard]] bool done() const { return pos_ == in_.size(); }

private:
    const std::vector<std::uint8_t>& in_;
    std::size_t pos_ = 0;
};

// PGM header token, skipping whitespace and comments.
std::string pgm_token(std::istream& in)
{
    std::string token;
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') {
                c = in.get();
            }
        } else if (std::isspace(c) != 0) {
            if (!token.empty()) {
                return token;
            }
        } else {
            token.push_back(static_cast<char>(c));
        }
        c = in.get();
    }
    return token;
}

}  // namespace

Frame::Frame(int index_, int width_, int height_, std::uint8_t fill)
    : index(index_), width(width_), height(height_),
      pixels(static_cast<std::size_t>(std::max(width_, 0)) * static_cast<std::size_t>(std::max(height_, 0)), fill)
{
}

void Frame::validate() const
{
    if (width <= 0 || height <= 0) {
        throw DataError("frame " + std::to_string(index) + " has non-positive dimensions");
    }
    if (pixels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw DataError("frame " + std::to_string(index) + " pixel count does not match dimensions");
    }
}

std::vector<Annotation> ImageSequence::annotations_of(int frame_index) const
{
    std::vector<Annotation> out;
    for (const auto& a : annotations) {
        if (a.frame_index == frame_index) {
            out.push_back(a);
        }
    }
    return out;
}

std::vector<std::vector<Annotation>> ImageSequence::annotations_by_frame() const
{
    std::vector<std::vector<Annotation>> out(frames.size());
    for (const auto& a : annotations) {
        if (a.frame_index >= 0 && a.frame_index < size()) {
            out[static_cast<std::size_t>(a.frame_index)].push_back(a);
        }
    }
    return out;
}

std::string_view to_string(Label label)
{
    return label == Label::pedestrian ? "pedestrian" : "ignore";
}

Label parse_label(std::string_view text)
{
    if (text == "pedestrian") {
        return Label::pedestrian;
    }
    if (text == "ignore") {
        return Label::ignore;
    }
    throw DataError("unknown label '" + std::string(text) + "'");
}

Frame read_pgm(const fs::path& path, int index)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    const auto magic = pgm_token(in);
    if (magic != "P5") {
        throw DataError(path.string() + ": not a binary PGM (P5)");
    }
    int width = 0;
    int height = 0;
    int maxval = 0;
    try {
        width = std::stoi(pgm_token(in));
        height = std::stoi(pgm_token(in));
        maxval = std::stoi(pgm_token(in));
    } catch (const std::exception&) {
        throw DataError(path.string() + ": malformed PGM header");
    }
    if (maxval != 255) {
        throw DataError(path.string() + ": PGM maxval must be 255, got " + std::to_string(maxval));
    }
    if (width <= 0 || height <= 0) {
        throw DataError(path.string() + ": bad PGM dimensions");
    }
    Frame frame(index, width, height);
    in.read(reinterpret_cast<char*>(frame.pixels.data()), static_cast<std::streamsize>(frame.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(frame.pixels.size())) {
        throw DataError(path.string() + ": truncated PGM data");
    }
    return frame;
}

void write_pgm(const fs::path& path, const Frame& frame)
{
    frame.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out << "P5\n" << frame.width << ' ' << frame.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(frame.pixels.data()), static_cast<std::streamsize>(frame.pixels.size()));
}

std::vector<Annotation> read_annotations(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    std::vector<Annotation> out;
    std::string line;
    int line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        if (!header_seen) {
            header_seen = true;
            if (line != kCsvHeader) {
                throw DataError(path.string() + ": expected header '" + kCsvHeader + "'");
            }
            continue;
        }
        const auto fields = split_csv(line);
        if (fields.size() != 7) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected 7 fields, got " +
                            std::to_string(fields.size()));
        }
        Annotation a;
        a.frame_index = parse_int(fields[0], "frame_index");
        a.bbox = {parse_int(fields[1], "x"), parse_int(fields[2], "y"), parse_int(fields[3], "w"),
                  parse_int(fields[4], "h")};
        a.label = parse_label(trim(fields[5]));
        const int occ = parse_int(fields[6], "occluded");
        if (occ != 0 && occ != 1) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": occluded must be 0 or 1");
        }
        a.occluded = occ == 1;
        if (!a.bbox.valid()) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": box must have w > 0 and h > 0");
        }
        out.push_back(a);
    }
    return out;
}

void write_annotations(const fs::path& path, const std::vector<Annotation>& annotations)
{
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out << kCsvHeader << '\n';
    for (const auto& a : annotations) {
        out << a.frame_index << ',' << a.bbox.x << ',' << a.bbox.y << ',' << a.bbox.w << ',' << a.bbox.h << ','
            << to_string(a.label) << ',' << (a.occluded ? 1 : 0) << '\n';
    }
}

ImageSequence load_sequence(const fs::path& dir)
{
    if (!fs::is_directory(dir)) {
        throw DataError("sequence directory not found: " + dir.string());
    }
    static const std::regex frame_re(R"(frame_(\d{6})\.pgm)");
    std::map<int, fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::smatch m;
        const auto name = entry.path().filename().string();
        if (entry.is_regular_file() && std::regex_match(name, m, frame_re)) {
            files.emplace(std::stoi(m[1].str()), entry.path());
        }
    }
    ImageSequence seq;
    int expected = 0;
    for (const auto& [index, path] : files) {
        if (index != expected) {
            throw DataError("non-contiguous frame indices in " + dir.string() + ": expected " +
                            std::to_string(expected) + ", found " + std::to_string(index));
        }
        seq.frames.push_back(read_pgm(path, index));
        ++expected;
    }
    for (const auto& f : seq.frames) {
        if (f.width != seq.frames.front().width || f.height != seq.frames.front().height) {
            throw DataError("frame " + std::to_string(f.index) + " dimensions differ from frame 0");
        }
    }
    const auto csv = dir / "annotations.csv";
    if (!fs::exists(csv)) {
        throw DataError("missing annotations.csv in " + dir.string());
    }
    seq.annotations = read_annotations(csv);
    for (const auto& a : seq.annotations) {
        if (a.frame_index < 0 || a.frame_index >= seq.size()) {
            throw DataError("annotation frame_index " + std::to_string(a.frame_index) + " out of range");
        }
    }
    const auto meta = dir / "sequence.txt";
    if (fs::exists(meta)) {
        std::ifstream in(meta);
        std::string line;
        while (std::getline(in, line)) {
            line = trim(line);
            if (line.rfind("fps=", 0) == 0) {
                try {
                    seq.fps = std::stod(line.substr(4));
                } catch (const std::exception&) {
                    throw DataError("bad fps in " + meta.string());
                }
            }
        }
        if (!(seq.fps > 0.0)) {
            throw DataError("fps must be positive in " + meta.string());
        }
    }
    return seq;
}

void save_sequence(const fs::path& dir, const ImageSequence& seq)
{
    fs::create_directories(dir);
    char name[32];
    for (const auto& frame : seq.frames) {
        std::snprintf(name, sizeof(name), "frame_%06d.pgm", frame.index);
        write_pgm(dir / name, frame);
    }
    write_annotations(dir / "annotations.csv", seq.annotations);
    std::ofstream meta(dir / "sequence.txt");
    meta.precision(17);
    meta << "fps=" << seq.fps << '\n';
}

ImageSequence subsample_fps(const ImageSequence& seq, double target_fps)
{
    if (!(target_fps > 0.0)) {
        throw UsageError("target fps must be positive");
    }
    if (target_fps > seq.fps + 1e-9) {
        throw UsageError("target fps exceeds sequence fps");
    }
    const int stride = std::max(1, static_cast<int>(std::lround(seq.fps / target_fps)));
    ImageSequence out;
    out.fps = stride == 1 ? seq.fps : target_fps;
    for (const auto& frame : seq.frames) {
        if (frame.index % stride == 0) {
            Frame kept = frame;
            kept.index = frame.index / stride;
            out.frames.push_back(std::move(kept));
        }
    }
    for (const auto& a : seq.annotations) {
        if (a.frame_index % stride == 0) {
            Annotation kept = a;
            kept.frame_index = a.frame_index / stride;
            out.annotations.push_back(kept);
        }
    }
    return out;
}

ImageSequence slice(const ImageSequence& seq, int first, int last)
{
    if (first < 0 || last > seq.size() || first > last) {
        throw UsageError("slice out of range");
    }
    ImageSequence out;
    out.fps = seq.fps;
    for (int i = first; i < last; ++i) {
        Frame f = seq.frames[static_cast<std::size_t>(i)];
        f.index = i - first;
        out.frames.push_back(std::move(f));
    }
    for (const auto& a : seq.annotations) {
        if (a.frame_index >= first && a.frame_index < last) {
            Annotation kept = a;
            kept.frame_index -= first;
            out.annotations.push_back(kept);
        }
    }
    return out;
}

std::vector<std::uint8_t> serialize_model(const LinearModel& model)
{
    ByteWriter w;
    w.bytes(kModelMagic.data(), kModelMagic.size());
    w.u32(model.kind == ModelKind::base ? 0U : 1U);
    w.u64(model.layout_id);
    const auto& c = model.channels;
    w.u32((c.grad_hist ? 1U : 0U) | (c.lbp_hist ? 2U : 0U) | (c.flow_hist ? 4U : 0U));
    w.i32(c.cell_size);
    w.i32(c.window_w);
    w.i32(c.window_h);
    const auto& n = model.neighborhood;
    w.i32(n.nx);
    w.i32(n.ny);
    w.i32(n.step_x);
    w.i32(n.step_y);
    w.i32(n.T);
    w.u32(static_cast<std::uint32_t>(n.style));
    w.u32(static_cast<std::uint32_t>(n.mode));
    w.f64(model.bias);
    w.u64(model.weights.size());
    for (double x : model.weights) {
        w.f64(x);
    }
    return w.take();
}

LinearModel deserialize_model(const std::vector<std::uint8_t>& bytes)
{
    ByteReader r(bytes);
    std::array<char, 8> magic{};
    if (bytes.size() < magic.size()) {
        throw DataError("model file truncated");
    }
    r.bytes(magic.data(), magic.size());
    if (std::memcmp(magic.data(), kModelMagic.data(), 6) != 0) {
        throw DataError("not a model file (bad magic)");
    }
    if (magic != kModelMagic) {
        throw DataError("unsupported model file version");
    }
    LinearModel m;
    const auto kind = r.u32();
    if (kind > 1) {
        throw DataError("bad model kind");
    }
    m.kind = kind == 0 ? ModelKind::base : ModelKind::ssl;
    m.layout_id = r.u64();
    const auto flags = r.u32();
    m.channels.grad_hist = (flags & 1U) != 0;
    m.channels.lbp_hist = (flags & 2U) != 0;
    m.channels.flow_hist = (flags & 4U) != 0;
    m.channels.cell_size = r.i32();
    m.channels.window_w = r.i32();
    m.channels.window_h = r.i32();
    m.neighborhood.nx = r.i32();
    m.neighborhood.ny = r.i32();
    m.neighborhood.step_x = r.i32();
    m.neighborhood.step_y = r.i32();
    m.neighborhood.T = r.i32();
    const auto style = r.u32();
    const auto mode = r.u32();
    if (style > 2 || mode > 1) {
        throw DataError("bad neighborhood enum in model file");
    }
    m.neighborhood.style = static_cast<TemporalStyle>(style);
    m.neighborhood.mode = static_cast<VolumeMode>(mode);
    m.bias = r.f64();
    const auto n = r.u64();
    r.need(n * 8);
    m.weights.resize(n);
    for (auto& x : m.weights) {
        x = r.f64();
    }
    if (!r.done()) {
        throw DataError("trailing bytes in model file");
    }
    for (double x : m.weights) {
        if (!std::isfinite(x)) {
            throw NumericError("non-finite weight in model file");
        }
    }
    return m;
}

void save_model(const LinearModel& model, const fs::path& path)
{
    const auto bytes = serialize_model(model);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

LinearModel load_model(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open model " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_model(bytes);
}

}  // namespace sslped
