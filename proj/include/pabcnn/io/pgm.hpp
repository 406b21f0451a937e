#pragma once

#include <filesystem>
#include <string>

#include "pabcnn/grid.hpp"

namespace pabcnn::io {

/// 8-bit binary PGM of |g| on a log scale: 0 dB (reference) maps to 255, -range_db and below to 0.
/// reference <= 0 uses max |g|.
std::string encode_pgm_db(const RealGrid& g, double range_db = 50.0, double reference = 0.0);
void write_pgm_db(const std::filesystem::path& path, const RealGrid& g, double range_db = 50.0,
                  double reference = 0.0);

/// Binary mask as a black/white PGM.
std::string encode_pgm_mask(const MaskGrid& g);

}  // namespace pabcnn::io
