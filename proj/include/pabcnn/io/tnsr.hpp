#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pabcnn/grid.hpp"

namespace pabcnn::io {

enum class Dtype { f32, f64, u8 };

std::string_view to_string(Dtype d);
std::size_t dtype_size(Dtype d);

/// One named map. Values are held as double; f32 and u8 payloads convert exactly on read.
struct NamedArray {
  std::string name;
  Dtype dtype = Dtype::f64;
  std::vector<std::size_t> shape;
  std::vector<double> values;

  std::size_t element_count() const;
};

class TnsrError : public std::runtime_error {
 public:
  enum class Kind { io, bad_magic, corrupt_header, truncated_payload, trailing_bytes, shape_mismatch, missing_map };
  TnsrError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Single-map file: header carries dtype and shape directly.
std::string encode_tnsr(const NamedArray& array);
/// Bundle: header carries a "maps" table of {name, dtype, shape, offset, nbytes}.
std::string encode_bundle(const std::vector<NamedArray>& maps);
/// Decodes either layout. A single-map file yields one entry with an empty name.
std::vector<NamedArray> decode_tnsr(std::string_view bytes);

void write_tnsr(const std::filesystem::path& path, const NamedArray& array);
void write_bundle(const std::filesystem::path& path, const std::vector<NamedArray>& maps);
std::vector<NamedArray> read_tnsr(const std::filesystem::path& path);

const NamedArray& find_map(const std::vector<NamedArray>& maps, std::string_view name);

NamedArray from_grid(std::string name, const RealGrid& g, Dtype dtype = Dtype::f64);
NamedArray from_mask(std::string name, const MaskGrid& g);
RealGrid to_grid(const NamedArray& a);
MaskGrid to_mask(const NamedArray& a);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

// Little-endian float64 packing shared with the checkpoint format.
void append_f64_le(std::string& out, const std::vector<double>& values);
std::vector<double> read_f64_le(std::string_view bytes, std::size_t count);

}  // namespace pabcnn::io
