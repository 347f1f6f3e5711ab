#include "modalsim/tracking/image_sequence.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "modalsim/error.hpp"

namespace modalsim::tracking {

void ImageSequence::validate() const {
    if (width < 1 || height < 1)
        throw ValidationError("image sequence has empty dimensions");
    if (frames.empty())
        throw ValidationError("image sequence has no frames");
    if (!(frame_rate > 0))
        throw ValidationError("image sequence frame_rate must be > 0");
    for (std::size_t i = 0; i < frames.size(); ++i)
        if (frames[i].size() != static_cast<std::size_t>(width) * height)
            throw ValidationError("frame " + std::to_string(i) + " has " +
                                  std::to_string(frames[i].size()) + " pixels, expected " +
                                  std::to_string(static_cast<std::size_t>(width) * height));
}

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_pgm_token(std::istream& in, const std::string& path) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {
            }
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty())
                return tok;
            continue;
        }
        tok.push_back(static_cast<char>(ch));
    }
    if (tok.empty())
        throw IoError(path + ": truncated PGM header");
    return tok;
}

int parse_header_int(const std::string& tok, const std::string& path) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(tok, &pos);
        if (pos == tok.size())
            return v;
    } catch (const std::exception&) {
    }
    throw IoError(path + ": corrupt PGM header token '" + tok + "'");
}

std::string format_frame_name(const std::string& pattern, int index) {
    char buf[512];
    const int written = std::snprintf(buf, sizeof(buf), pattern.c_str(), index);
    if (written <= 0 || written >= static_cast<int>(sizeof(buf)))
        throw ValidationError("bad frame filename pattern: " + pattern);
    return std::string(buf);
}

} // namespace

std::vector<std::uint8_t> load_pgm(const std::string& path, int& width, int& height) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open image: " + path);

    const std::string magic = next_pgm_token(in, path);
    if (magic != "P5")
        throw IoError(path + ": expected binary PGM magic 'P5', got '" + magic + "'");
    width = parse_header_int(next_pgm_token(in, path), path);
    height = parse_header_int(next_pgm_token(in, path), path);
    const int maxval = parse_header_int(next_pgm_token(in, path), path);
    if (width < 1 || height < 1)
        throw IoError(path + ": corrupt PGM dimensions");
    if (maxval < 1 || maxval > 255)
        throw IoError(path + ": unsupported PGM maxval " + std::to_string(maxval));

    std::vector<std::uint8_t> pixels(static_cast<std::size_t>(width) * height);
    in.read(reinterpret_cast<char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(pixels.size()))
        throw IoError(path + ": truncated PGM pixel data");
    return pixels;
}

void save_pgm(const std::string& path, const std::vector<std::uint8_t>& pixels,
              int width, int height) {
    if (pixels.size() != static_cast<std::size_t>(width) * height)
        throw ValidationError("save_pgm: pixel count does not match dimensions");
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write image: " + path);
    out << "P5\n" << width << ' ' << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(pixels.data()),
              static_cast<std::streamsize>(pixels.size()));
    if (!out)
        throw IoError("write failed: " + path);
}

ImageSequence load_pgm_sequence(const std::string& directory, const std::string& pattern,
                                double frame_rate, int first_index) {
    namespace fs = std::filesystem;
    ImageSequence seq;
    seq.frame_rate = frame_rate;

    for (int index = first_index;; ++index) {
        const fs::path path = fs::path(directory) / format_frame_name(pattern, index);
        if (!fs::exists(path)) {
            if (index == first_index)
                throw IoError("no frames found: " + path.string());
            break;
        }
        int w = 0, h = 0;
        auto pixels = load_pgm(path.string(), w, h);
        if (seq.frames.empty()) {
            seq.width = w;
            seq.height = h;
        } else if (w != seq.width || h != seq.height) {
            throw ValidationError(path.string() + ": frame size " + std::to_string(w) + "x" +
                                  std::to_string(h) + " differs from first frame");
        }
        seq.frames.push_back(std::move(pixels));
    }
    seq.validate();
    return seq;
}

void save_pgm_sequence(const ImageSequence& seq, const std::string& directory,
                       const std::string& pattern, int first_index) {
    namespace fs = std::filesystem;
    seq.validate();
    fs::create_directories(directory);
    for (int i = 0; i < seq.frame_count(); ++i) {
        const fs::path path = fs::path(directory) / format_frame_name(pattern, first_index + i);
        save_pgm(path.string(), seq.frames[i], seq.width, seq.height);
    }
}

ImageSequence load_raw_sequence(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open sequence: " + path);
    std::string magic;
    int width = 0, height = 0, n_frames = 0;
    double fps = 0;
    in >> magic >> width >> height >> n_frames >> fps;
    if (!in || magic != "MSRAW")
        throw IoError(path + ": expected header 'MSRAW <width> <height> <frames> <fps>'");
    in.get(); // single newline after the header

    ImageSequence seq;
    seq.width = width;
    seq.height = height;
    seq.frame_rate = fps;
    if (width < 1 || height < 1 || n_frames < 1 || !(fps > 0))
        throw IoError(path + ": corrupt MSRAW header values");
    seq.frames.resize(n_frames);
    const std::size_t frame_bytes = static_cast<std::size_t>(width) * height;
    for (int i = 0; i < n_frames; ++i) {
        seq.frames[i].resize(frame_bytes);
        in.read(reinterpret_cast<char*>(seq.frames[i].data()),
                static_cast<std::streamsize>(frame_bytes));
        if (in.gcount() != static_cast<std::streamsize>(frame_bytes))
            throw IoError(path + ": truncated at frame " + std::to_string(i));
    }
    seq.validate();
    return seq;
}

void save_raw_sequence(const ImageSequence& seq, const std::string& path) {
    seq.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write sequence: " + path);
    out << "MSRAW " << seq.width << ' ' << seq.height << ' ' << seq.frame_count() << ' '
        << seq.frame_rate << '\n';
    for (const auto& frame : seq.frames)
        out.write(reinterpret_cast<const char*>(frame.data()),
                  static_cast<std::streamsize>(frame.size()));
    if (!out)
        throw IoError("write failed: " + path);
}

} // namespace modalsim::tracking
