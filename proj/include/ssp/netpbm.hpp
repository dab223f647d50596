#pragma once

// Plain-text (ASCII) graymap / pixmap reading and writing, maxval 255.
//
//   BinaryMask  P2, pixels in {0,255}
//   TriMask     P2, pixels in {0,128,255}; 128 decodes to exactly 0.5
//   GrayFrame   P2, any pixel in [0,255], decoded as value/255
//   ImageFrame  P2 (1 channel) or P3 (3 channels), decoded as value/255
//
// Any other maxval, or a pixel value outside a mask's alphabet, is a FormatError.

#include <filesystem>
#include <iosfwd>

#include "ssp/grid.hpp"

namespace ssp::netpbm {

BinaryMask parse_binary_mask(std::istream& in);
TriMask parse_trimask(std::istream& in);
GrayFrame parse_gray(std::istream& in);
ImageFrame parse_image(std::istream& in);

void format(std::ostream& out, const BinaryMask& mask);
void format(std::ostream& out, const TriMask& mask);
void format(std::ostream& out, const GrayFrame& frame);
void format(std::ostream& out, const ImageFrame& frame);

BinaryMask read_binary_mask(const std::filesystem::path& path);
TriMask read_trimask(const std::filesystem::path& path);
GrayFrame read_gray(const std::filesystem::path& path);
ImageFrame read_image(const std::filesystem::path& path);

void write(const std::filesystem::path& path, const BinaryMask& mask);
void write(const std::filesystem::path& path, const TriMask& mask);
void write(const std::filesystem::path& path, const GrayFrame& frame);
void write(const std::filesystem::path& path, const ImageFrame& frame);

/// Encoding of a [0,1] intensity as a 0..255 level (round half away from zero).
int encode_level(double value);

}  // namespace ssp::netpbm
