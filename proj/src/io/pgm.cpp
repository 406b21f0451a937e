#include "pabcnn/io/pgm.hpp"

#include <algorithm>
#include <cmath>

#include "pabcnn/io/tnsr.hpp"

namespace pabcnn::io {

namespace {

std::string pgm_header(std::size_t cols, std::size_t rows) {
  return "P5\n" + std::to_string(cols) + " " + std::to_string(rows) + "\n255\n";
}

}  // namespace

std::string encode_pgm_db(const RealGrid& g, double range_db, double reference) {
  if (reference <= 0.0) {
    for (double v : g.values()) reference = std::max(reference, std::abs(v));
  }
  std::string out = pgm_header(g.cols(), g.rows());
  for (double v : g.values()) {
    unsigned char level = 0;
    const double mag = std::abs(v);
    if (reference > 0.0 && mag > 0.0) {
      const double db = std::clamp(20.0 * std::log10(mag / reference), -range_db, 0.0);
      level = static_cast<unsigned char>(std::lround(255.0 * (db + range_db) / range_db));
    }
    out.push_back(static_cast<char>(level));
  }
  return out;
}

void write_pgm_db(const std::filesystem::path& path, const RealGrid& g, double range_db, double reference) {
  write_file(path, encode_pgm_db(g, range_db, reference));
}

std::string encode_pgm_mask(const MaskGrid& g) {
  std::string out = pgm_header(g.cols(), g.rows());
  for (auto v : g.values()) out.push_back(static_cast<char>(v != 0 ? 255 : 0));
  return out;
}

}  // namespace pabcnn::io
