#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace modalsim::tracking {

// Grayscale image sequence, row-major uint8 frames of identical size.
struct ImageSequence {
    int width = 0;
    int height = 0;
    double frame_rate = 60.0; // Hz
    std::vector<std::vector<std::uint8_t>> frames;

    int frame_count() const { return static_cast<int>(frames.size()); }
    void validate() const;

    std::uint8_t at(int frame, int x, int y) const {
        return frames[frame][static_cast<std::size_t>(y) * width + x];
    }
};

// Binary PGM (P5), maxval <= 255, '#' comments allowed in the header.
std::vector<std::uint8_t> load_pgm(const std::string& path, int& width, int& height);
void save_pgm(const std::string& path, const std::vector<std::uint8_t>& pixels,
              int width, int height);

// Numbered PGM files. The pattern holds one printf-style integer field,
// e.g. "frame_%04d.pgm"; frames are read starting at first_index until the
// first missing file.
ImageSequence load_pgm_sequence(const std::string& directory, const std::string& pattern,
                                double frame_rate, int first_index = 0);
void save_pgm_sequence(const ImageSequence& seq, const std::string& directory,
                       const std::string& pattern, int first_index = 0);

// Single-file concatenated format: text header "MSRAW <width> <height>
// <frames> <fps>\n" followed by width*height bytes per frame, row-major.
ImageSequence load_raw_sequence(const std::string& path);
void save_raw_sequence(const ImageSequence& seq, const std::string& path);

} // namespace modalsim::tracking
