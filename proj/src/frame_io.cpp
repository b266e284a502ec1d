#include "fcvg/frame_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "fcvg/error.hpp"

namespace fcvg {
namespace fs = std::filesystem;
namespace {

struct Rgb8 {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;
};

Rgb8 to_rgb8(std::span<const double> frame, int channels, int height, int width) {
    if (channels != 1 && channels != 3) throw StructuralError("only 1- or 3-channel frames can be written");
    Rgb8 out{width, height, std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height * 3)};
    const std::size_t plane = static_cast<std::size_t>(width) * height;
    for (std::size_t p = 0; p < plane; ++p) {
        for (int c = 0; c < 3; ++c) out.data[p * 3 + c] = quantize(frame[(channels == 3 ? c : 0) * plane + p]);
    }
    return out;
}

Image from_rgb8(const Rgb8& px) {
    Image img(3, px.height, px.width);
    const std::size_t plane = static_cast<std::size_t>(px.width) * px.height;
    for (std::size_t p = 0; p < plane; ++p) {
        for (int c = 0; c < 3; ++c) img.values()[c * plane + p] = px.data[p * 3 + c] / 255.0;
    }
    return img;
}

void write_rgb8(const Rgb8& px, const fs::path& path, FrameFormat format) {
    if (format == FrameFormat::ppm) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw ParseError(path.string() + ": cannot open for writing");
        out << encode_ppm(px.width, px.height, px.data);
        return;
    }
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(px.width);
    image.height = static_cast<png_uint_32>(px.height);
    image.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&image, path.c_str(), 0, px.data.data(), 0, nullptr)) {
        throw ParseError(path.string() + ": PNG write failed: " + image.message);
    }
}

// Next whitespace-delimited token of a PNM header, skipping '#' comments.
std::string pnm_token(std::istream& in) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {
            }
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(ch));
    }
    return tok;
}

Rgb8 read_ppm(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path.string() + ": cannot open");
    if (pnm_token(in) != "P6") throw ParseError(path.string() + ": not a binary PPM (P6)");
    Rgb8 px;
    try {
        px.width = std::stoi(pnm_token(in));
        px.height = std::stoi(pnm_token(in));
        if (std::stoi(pnm_token(in)) != 255) throw ParseError(path.string() + ": only maxval 255 is supported");
    } catch (const std::logic_error&) {
        throw ParseError(path.string() + ": malformed PPM header");
    }
    if (px.width <= 0 || px.height <= 0) throw ParseError(path.string() + ": invalid PPM dimensions");
    px.data.resize(static_cast<std::size_t>(px.width) * px.height * 3);
    if (!in.read(reinterpret_cast<char*>(px.data.data()), static_cast<std::streamsize>(px.data.size()))) {
        throw ParseError(path.string() + ": truncated PPM pixel data");
    }
    return px;
}

Rgb8 read_png(const fs::path& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str())) {
        throw ParseError(path.string() + ": " + image.message);
    }
    image.format = PNG_FORMAT_RGB;
    Rgb8 px{static_cast<int>(image.width), static_cast<int>(image.height), {}};
    px.data.resize(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, px.data.data(), 0, nullptr)) {
        png_image_free(&image);
        throw ParseError(path.string() + ": " + image.message);
    }
    return px;
}

Rgb8 read_any(const fs::path& path) {
    const std::string ext = path.extension().string();
    if (ext == ".ppm") return read_ppm(path);
    if (ext == ".png") return read_png(path);
    throw ParseError(path.string() + ": unsupported image extension (expected .png or .ppm)");
}

fs::path frame_path(const fs::path& dir, int index, int count, FrameFormat format) {
    int digits = 4;
    for (int n = count - 1; n >= 10000; n /= 10) ++digits;
    std::string num = std::to_string(index);
    if (static_cast<int>(num.size()) < digits) num.insert(0, digits - num.size(), '0');
    return dir / ("frame_" + num + "." + std::string(extension(format)));
}

} // namespace

FrameFormat parse_frame_format(std::string_view name) {
    if (name == "png") return FrameFormat::png;
    if (name == "ppm") return FrameFormat::ppm;
    throw DomainError("unknown frame format '" + std::string(name) + "'");
}

std::string_view extension(FrameFormat format) { return format == FrameFormat::png ? "png" : "ppm"; }

std::uint8_t quantize(double v) {
    if (!(v > 0.0)) return 0;
    if (v >= 1.0) return 255;
    return static_cast<std::uint8_t>(std::lround(v * 255.0));
}

std::string encode_ppm(int width, int height, std::span<const std::uint8_t> rgb) {
    std::string out = "P6\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(rgb.data()), rgb.size());
    return out;
}

std::vector<fs::path> save_frames(const Video& video, const fs::path& dir, FrameFormat format) {
    fs::create_directories(dir);
    std::vector<fs::path> written;
    for (int n = 0; n < video.frames(); ++n) {
        const fs::path p = frame_path(dir, n, video.frames(), format);
        write_rgb8(to_rgb8(video.frame(n), video.channels(), video.height(), video.width()), p, format);
        written.push_back(p);
    }
    return written;
}

std::vector<fs::path> save_condition_frames(std::span<const ConditionFrame> frames, const fs::path& dir,
                                            FrameFormat format) {
    fs::create_directories(dir);
    std::vector<fs::path> written;
    const int count = static_cast<int>(frames.size());
    for (int n = 0; n < count; ++n) {
        const fs::path p = frame_path(dir, n, count, format);
        write_rgb8({frames[n].width, frames[n].height, frames[n].pixels}, p, format);
        written.push_back(p);
    }
    return written;
}

Video load_frames(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw StructuralError(dir.string() + ": not a directory");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        const std::string ext = entry.path().extension().string();
        if (name.rfind("frame_", 0) == 0 && (ext == ".png" || ext == ".ppm")) files.push_back(entry.path());
    }
    if (files.empty()) throw StructuralError(dir.string() + ": no frame_* .png/.ppm files");
    std::sort(files.begin(), files.end());
    std::vector<Image> frames;
    for (const auto& f : files) {
        frames.push_back(from_rgb8(read_any(f)));
        if (!frames.back().same_shape(frames.front())) throw StructuralError(f.string() + ": frame size differs");
    }
    return Video::from_frames(frames);
}

Image read_image(const fs::path& path) { return from_rgb8(read_any(path)); }

void write_image(const Image& image, const fs::path& path) {
    const std::string ext = path.extension().string();
    const FrameFormat format = ext == ".ppm" ? FrameFormat::ppm : FrameFormat::png;
    if (ext != ".ppm" && ext != ".png") throw ParseError(path.string() + ": unsupported image extension");
    write_rgb8(to_rgb8(image.values(), image.channels(), image.height(), image.width()), path, format);
}

} // namespace fcvg
