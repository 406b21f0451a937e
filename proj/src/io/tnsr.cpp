#include "pabcnn/io/tnsr.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace pabcnn::io {

using nlohmann::json;

namespace {

constexpr std::string_view kMagic = "TNSR1";

template <typename T>
void append_le(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.append(bytes, sizeof(T));
}

template <typename T>
T read_le(const char* p) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

Dtype parse_dtype(const std::string& s) {
  if (s == "f32") return Dtype::f32;
  if (s == "f64") return Dtype::f64;
  if (s == "u8") return Dtype::u8;
  throw TnsrError(TnsrError::Kind::corrupt_header, "TNSR: unknown dtype '" + s + "'");
}

std::string payload(const NamedArray& a) {
  if (a.values.size() != a.element_count()) {
    throw TnsrError(TnsrError::Kind::shape_mismatch,
                    "TNSR: map '" + a.name + "' has " + std::to_string(a.values.size()) +
                        " values for shape of " + std::to_string(a.element_count()));
  }
  std::string out;
  out.reserve(a.values.size() * dtype_size(a.dtype));
  for (double v : a.values) {
    switch (a.dtype) {
      case Dtype::f64: append_le(out, v); break;
      case Dtype::f32: append_le(out, static_cast<float>(v)); break;
      case Dtype::u8: out.push_back(static_cast<char>(static_cast<std::uint8_t>(v))); break;
    }
  }
  return out;
}

std::vector<double> unpack(std::string_view bytes, Dtype dtype, std::size_t count) {
  std::vector<double> out(count);
  const std::size_t size = dtype_size(dtype);
  for (std::size_t i = 0; i < count; ++i) {
    const char* p = bytes.data() + i * size;
    switch (dtype) {
      case Dtype::f64: out[i] = read_le<double>(p); break;
      case Dtype::f32: out[i] = static_cast<double>(read_le<float>(p)); break;
      case Dtype::u8: out[i] = static_cast<double>(static_cast<std::uint8_t>(*p)); break;
    }
  }
  return out;
}

std::vector<std::size_t> parse_shape(const json& j) {
  if (!j.is_array()) throw TnsrError(TnsrError::Kind::corrupt_header, "TNSR: shape must be an array");
  std::vector<std::size_t> shape;
  for (const auto& d : j) {
    if (!d.is_number_unsigned()) throw TnsrError(TnsrError::Kind::corrupt_header, "TNSR: shape entries must be unsigned");
    shape.push_back(d.get<std::size_t>());
  }
  return shape;
}

}  // namespace

std::string_view to_string(Dtype d) {
  switch (d) {
    case Dtype::f32: return "f32";
    case Dtype::f64: return "f64";
    case Dtype::u8: return "u8";
  }
  return "?";
}

std::size_t dtype_size(Dtype d) {
  switch (d) {
    case Dtype::f32: return 4;
    case Dtype::f64: return 8;
    case Dtype::u8: return 1;
  }
  return 0;
}

std::size_t NamedArray::element_count() const {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string encode_tnsr(const NamedArray& array) {
  json header = {{"magic", kMagic}, {"byte_order", "LE"}, {"dtype", to_string(array.dtype)}, {"shape", array.shape}};
  std::string out = header.dump();
  out.push_back('\n');
  out += payload(array);
  return out;
}

std::string encode_bundle(const std::vector<NamedArray>& maps) {
  json table = json::array();
  std::string body;
  for (const auto& m : maps) {
    const std::string bytes = payload(m);
    table.push_back({{"name", m.name},
                     {"dtype", to_string(m.dtype)},
                     {"shape", m.shape},
                     {"offset", body.size()},
                     {"nbytes", bytes.size()}});
    body += bytes;
  }
  json header = {{"magic", kMagic}, {"byte_order", "LE"}, {"maps", table}};
  std::string out = header.dump();
  out.push_back('\n');
  out += body;
  return out;
}

std::vector<NamedArray> decode_tnsr(std::string_view bytes) {
  const auto newline = bytes.find('\n');
  if (newline == std::string_view::npos) {
    throw TnsrError(TnsrError::Kind::corrupt_header, "TNSR: missing header terminator");
  }
  json header;
  try {
    header = json::parse(bytes.substr(0, newline));
  } catch (const json::exception& e) {
    throw TnsrError(TnsrError::Kind::corrupt_header, std::string("TNSR: header is not valid JSON: ") + e.what());
  }
  if (!header.is_object() || !header.contains("magic") || header["magic"] != kMagic) {
    throw TnsrError(TnsrError::Kind::bad_magic, "TNSR: bad magic");
  }
  if (header.value("byte_order", "") != "LE") {
    throw TnsrError(TnsrError::Kind::corrupt_header, "TNSR: byte_order must be LE");
  }
  const std::string_view body = bytes.substr(newline + 1);

  std::vector<NamedArray> out;
  try {
    if (header.contains("maps")) {
      std::size_t expected_end = 0;
      for (const auto& entry : header.at("maps")) {
        NamedArray a;
        a.name = entry.at("name").get<std::string>();
        a.dtype = parse_dtype(entry.at("dtype").get<std::string>());
        a.shape = parse_shape(entry.at("shape"));
        const auto offset = entry.at("offset").get<std::size_t>();
        const auto nbytes = entry.at("nbytes").get<std::size_t>();
        if (nbytes != a.element_count() * dtype_size(a.dtype)) {
          throw TnsrError(TnsrError::Kind::corrupt_header, "TNSR: map '" + a.name + "' nbytes disagrees with shape");
        }
        if (offset + nbytes > body.size()) {
          throw TnsrError(TnsrError::Kind::truncated_payload, "TNSR: payload of map '" + a.name + "' is truncated");
        }
        a.values = unpack(body.substr(offset, nbytes), a.dtype, a.element_count());
        expected_end = std::max(expected_end, offset + nbytes);
        out.push_back(std::move(a));
      }
      if (body.size() != expected_end) {
        throw TnsrError(TnsrError::Kind::trailing_bytes, "TNSR: unexpected bytes after the last map");
      }
    } else {
      NamedArray a;
      a.dtype = parse_dtype(header.at("dtype").get<std::string>());
      a.shape = parse_shape(header.at("shape"));
      const std::size_t nbytes = a.element_count() * dtype_size(a.dtype);
      if (body.size() < nbytes) {
        throw TnsrError(TnsrError::Kind::truncated_payload, "TNSR: payload truncated (" + std::to_string(body.size()) +
                                                                " of " + std::to_string(nbytes) + " bytes)");
      }
      if (body.size() > nbytes) throw TnsrError(TnsrError::Kind::trailing_bytes, "TNSR: unexpected trailing bytes");
      a.values = unpack(body, a.dtype, a.element_count());
      out.push_back(std::move(a));
    }
  } catch (const json::exception& e) {
    throw TnsrError(TnsrError::Kind::corrupt_header, std::string("TNSR: malformed header: ") + e.what());
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TnsrError(TnsrError::Kind::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw TnsrError(TnsrError::Kind::io, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw TnsrError(TnsrError::Kind::io, "write failed: " + path.string());
}

void write_tnsr(const std::filesystem::path& path, const NamedArray& array) { write_file(path, encode_tnsr(array)); }

void write_bundle(const std::filesystem::path& path, const std::vector<NamedArray>& maps) {
  write_file(path, encode_bundle(maps));
}

std::vector<NamedArray> read_tnsr(const std::filesystem::path& path) { return decode_tnsr(read_file(path)); }

const NamedArray& find_map(const std::vector<NamedArray>& maps, std::string_view name) {
  for (const auto& m : maps) {
    if (m.name == name) return m;
  }
  throw TnsrError(TnsrError::Kind::missing_map, "TNSR: bundle has no map named '" + std::string(name) + "'");
}

NamedArray from_grid(std::string name, const RealGrid& g, Dtype dtype) {
  return {std::move(name), dtype, {g.rows(), g.cols()}, g.raw()};
}

NamedArray from_mask(std::string name, const MaskGrid& g) {
  return {std::move(name), Dtype::u8, {g.rows(), g.cols()}, std::vector<double>(g.raw().begin(), g.raw().end())};
}

RealGrid to_grid(const NamedArray& a) {
  if (a.shape.size() != 2) throw TnsrError(TnsrError::Kind::shape_mismatch, "TNSR: map '" + a.name + "' is not 2-D");
  return RealGrid(a.shape[0], a.shape[1], a.values);
}

MaskGrid to_mask(const NamedArray& a) {
  if (a.shape.size() != 2) throw TnsrError(TnsrError::Kind::shape_mismatch, "TNSR: map '" + a.name + "' is not 2-D");
  std::vector<unsigned char> v(a.values.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values[i] != 0.0 ? 1 : 0;
  return MaskGrid(a.shape[0], a.shape[1], std::move(v));
}

void append_f64_le(std::string& out, const std::vector<double>& values) {
  for (double v : values) append_le(out, v);
}

std::vector<double> read_f64_le(std::string_view bytes, std::size_t count) {
  return unpack(bytes, Dtype::f64, count);
}

}  // namespace pabcnn::io
