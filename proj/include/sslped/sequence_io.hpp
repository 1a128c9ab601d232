#pragma once

#include "sslped/geometry.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace sslped {

struct LinearModel;

/// One grayscale frame, row-major 8-bit intensities.
struct Frame {
    int index = 0;
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    Frame() = default;
    Frame(int index_, int width_, int height_, std::uint8_t fill = 0);

    [[nodiscard]] std::uint8_t at(int x, int y) const
    {
        return pixels[static_cast<std::size_t>(y) * width + x];
    }
    std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }

    /// Throws DataError when the dimensions and pixel count disagree.
    void validate() const;

    friend bool operator==(const Frame&, const Frame&) = default;
};

enum class Label { pedestrian, ignore };

struct Annotation {
    int frame_index = 0;
    BBox bbox;
    Label label = Label::pedestrian;
    bool occluded = false;

    friend bool operator==(const Annotation&, const Annotation&) = default;
};

/// Ordered frames, indices 0..N-1, plus their annotations.
struct ImageSequence {
    std::vector<Frame> frames;
    std::vector<Annotation> annotations;
    double fps = 30.0;

    [[nodiscard]] int size() const { return static_cast<int>(frames.size()); }

    /// Annotations of one frame, in file order.
    [[nodiscard]] std::vector<Annotation> annotations_of(int frame_index) const;

    /// Groups annotations by frame index; result has size() entries.
    [[nodiscard]] std::vector<std::vector<Annotation>> annotations_by_frame() const;

    friend bool operator==(const ImageSequence&, const ImageSequence&) = default;
};

std::string_view to_string(Label label);
Label parse_label(std::string_view text);

// PGM (P5, maxval 255)
Frame read_pgm(const std::filesystem::path& path, int index = 0);
void write_pgm(const std::filesystem::path& path, const Frame& frame);

// Annotations CSV with header `frame_index,x,y,w,h,label,occluded`.
std::vector<Annotation> read_annotations(const std::filesystem::path& path);
void write_annotations(const std::filesystem::path& path, const std::vector<Annotation>& annotations);

/// Loads `frame_%06d.pgm` files plus `annotations.csv` from a directory.
/// The optional `sequence.txt` carries `fps=<value>`; 30 is assumed when absent.
ImageSequence load_sequence(const std::filesystem::path& dir);
void save_sequence(const std::filesystem::path& dir, const ImageSequence& seq);

/// Keeps every stride-th frame, stride = round(fps / target_fps). Kept frames
/// and their annotations are re-indexed to stay contiguous.
ImageSequence subsample_fps(const ImageSequence& seq, double target_fps);

/// Contiguous frame range [first, last) as its own sequence, re-indexed from 0.
ImageSequence slice(const ImageSequence& seq, int first, int last);

// Model files: 8-byte magic `SSLMDL01`, little-endian fields, 64-bit IEEE reals.
void save_model(const LinearModel& model, const std::filesystem::path& path);
LinearModel load_model(const std::filesystem::path& path);
std::vector<std::uint8_t> serialize_model(const LinearModel& model);
LinearModel deserialize_model(const std::vector<std::uint8_t>& bytes);

}  // namespace sslped
