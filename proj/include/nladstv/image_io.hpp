#pragma once

#include <filesystem>
#include <iosfwd>

#include "nladstv/image.hpp"

namespace nladstv {

/// TVF1 float-map: the 4-byte magic "TVF1", then width, height and channel
/// count as little-endian u32, then width*height*channels little-endian
/// IEEE-754 binary32 samples in planar row-major order.
void write_float_map(std::ostream& out, const Image& img);
Image read_float_map(std::istream& in);

/// Reads 8/16-bit gray or RGB PNG (alpha is dropped, palettes expanded) or a
/// `.tvf` float-map. 8-bit samples map to v/255, 16-bit to v/65535.
Image load_image(const std::filesystem::path& path);

/// Writes by extension: `.tvf` stores the samples losslessly at float
/// precision; `.png` clamps to [0,1] and quantizes with round-half-up.
void save_image(const Image& img, const std::filesystem::path& path,
                int png_bit_depth = 8);

}  // namespace nladstv
