#pragma once

#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "phm/cloud.hpp"
#include "phm/error.hpp"

namespace phm {

enum class PlyFormat { Ascii, BinaryLittleEndian };

namespace ply_detail {

static_assert(std::endian::native == std::endian::little, "binary PLY reader assumes a little-endian host");

enum class Scalar { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

inline std::optional<Scalar> parse_scalar(std::string_view name) {
  if (name == "char" || name == "int8") return Scalar::Int8;
  if (name == "uchar" || name == "uint8") return Scalar::UInt8;
  if (name == "short" || name == "int16") return Scalar::Int16;
  if (name == "ushort" || name == "uint16") return Scalar::UInt16;
  if (name == "int" || name == "int32") return Scalar::Int32;
  if (name == "uint" || name == "uint32") return Scalar::UInt32;
  if (name == "float" || name == "float32") return Scalar::Float32;
  if (name == "double" || name == "float64") return Scalar::Float64;
  return std::nullopt;
}

struct Property {
  std::string name;
  Scalar type;
  std::optional<Scalar> list_count_type;  // set for list properties
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

struct Header {
  PlyFormat format = PlyFormat::Ascii;
  std::vector<Element> elements;
  std::size_t payload_offset = 0;
};

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline Header parse_header(std::string_view data) {
  Header header;
  std::size_t pos = 0;
  bool saw_format = false;
  bool first = true;
  for (;;) {
    const std::size_t eol = data.find('\n', pos);
    if (eol == std::string_view::npos) throw Error(ErrorKind::ParseError, "PLY header is not terminated");
    const auto tokens = split_ws(data.substr(pos, eol - pos));
    pos = eol + 1;
    if (first) {
      if (tokens.size() != 1 || tokens[0] != "ply") throw Error(ErrorKind::ParseError, "missing 'ply' magic");
      first = false;
      continue;
    }
    if (tokens.empty() || tokens[0] == "comment" || tokens[0] == "obj_info") continue;
    if (tokens[0] == "end_header") break;
    if (tokens[0] == "format") {
      if (tokens.size() != 3) throw Error(ErrorKind::ParseError, "malformed format line");
      if (tokens[1] == "ascii") {
        header.format = PlyFormat::Ascii;
      } else if (tokens[1] == "binary_little_endian") {
        header.format = PlyFormat::BinaryLittleEndian;
      } else {
        throw Error(ErrorKind::ParseError, "unsupported PLY format '" + std::string(tokens[1]) + "'");
      }
      saw_format = true;
    } else if (tokens[0] == "element") {
      if (tokens.size() != 3) throw Error(ErrorKind::ParseError, "malformed element line");
      Element e;
      e.name = tokens[1];
      auto [p, ec] = std::from_chars(tokens[2].data(), tokens[2].data() + tokens[2].size(), e.count);
      if (ec != std::errc{} || p != tokens[2].data() + tokens[2].size())
        throw Error(ErrorKind::ParseError, "bad element count for '" + e.name + "'");
      header.elements.push_back(std::move(e));
    } else if (tokens[0] == "property") {
      if (header.elements.empty()) throw Error(ErrorKind::ParseError, "property before any element");
      Property prop;
      if (tokens.size() == 3) {
        auto t = parse_scalar(tokens[1]);
        if (!t) throw Error(ErrorKind::ParseError, "unknown property type '" + std::string(tokens[1]) + "'");
        prop = Property{std::string(tokens[2]), *t, std::nullopt};
      } else if (tokens.size() == 5 && tokens[1] == "list") {
        auto ct = parse_scalar(tokens[2]);
        auto it = parse_scalar(tokens[3]);
        if (!ct || !it) throw Error(ErrorKind::ParseError, "unknown list property type");
        prop = Property{std::string(tokens[4]), *it, ct};
      } else {
        throw Error(ErrorKind::ParseError, "malformed property line");
      }
      header.elements.back().properties.push_back(std::move(prop));
    } else {
      throw Error(ErrorKind::ParseError, "unexpected header keyword '" + std::string(tokens[0]) + "'");
    }
  }
  if (!saw_format) throw Error(ErrorKind::ParseError, "missing format line");
  header.payload_offset = pos;
  return header;
}

/// Sequential reader over the payload that yields every scalar as a double.
class PayloadReader {
 public:
  PayloadReader(std::string_view payload, PlyFormat format) : data_(payload), format_(format) {}

  double read(Scalar type) { return format_ == PlyFormat::Ascii ? read_ascii() : read_binary(type); }

 private:
  double read_ascii() {
    while (pos_ < data_.size() && std::isspace(static_cast<unsigned char>(data_[pos_]))) ++pos_;
    if (pos_ >= data_.size()) throw Error(ErrorKind::ParseError, "PLY payload truncated");
    const char* begin = data_.data() + pos_;
    const char* end = data_.data() + data_.size();
    double value = 0.0;
    auto [p, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{}) throw Error(ErrorKind::ParseError, "invalid number in PLY payload");
    pos_ += static_cast<std::size_t>(p - begin);
    return value;
  }

  template <typename T>
  T take() {
    if (pos_ + sizeof(T) > data_.size()) throw Error(ErrorKind::ParseError, "PLY payload truncated");
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  double read_binary(Scalar type) {
    switch (type) {
      case Scalar::Int8: return take<std::int8_t>();
      case Scalar::UInt8: return take<std::uint8_t>();
      case Scalar::Int16: return take<std::int16_t>();
      case Scalar::UInt16: return take<std::uint16_t>();
      case Scalar::Int32: return take<std::int32_t>();
      case Scalar::UInt32: return take<std::uint32_t>();
      case Scalar::Float32: return take<float>();
      case Scalar::Float64: return take<double>();
    }
    return 0.0;
  }

  std::string_view data_;
  PlyFormat format_;
  std::size_t pos_ = 0;
};

inline void write_number(std::string& out, double v) {
  std::array<char, 32> buf{};
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  out.append(buf.data(), p);
}

}  // namespace ply_detail

/// Reads the vertex element of an ascii or binary_little_endian PLY file.
/// Properties other than x/y/z/red/green/blue, and elements other than
/// `vertex`, are skipped; a note about each is appended to `warnings`.
inline PointCloud load_ply(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr) {
  using namespace ply_detail;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const Header header = parse_header(data);

  auto warn = [&](std::string msg) {
    if (warnings) warnings->push_back(std::move(msg));
  };

  const Element* vertex = nullptr;
  for (const auto& e : header.elements) {
    if (e.name == "vertex" && !vertex) {
      vertex = &e;
    } else {
      warn("ignoring element '" + e.name + "'");
    }
  }
  if (!vertex) throw Error(ErrorKind::ParseError, "no vertex element");

  enum Slot { X, Y, Z, R, G, B, kSlots };
  constexpr std::array<std::string_view, kSlots> names{"x", "y", "z", "red", "green", "blue"};
  std::array<int, kSlots> slot_of{-1, -1, -1, -1, -1, -1};
  for (std::size_t p = 0; p < vertex->properties.size(); ++p) {
    const auto& prop = vertex->properties[p];
    bool used = false;
    for (int s = 0; s < kSlots; ++s) {
      if (prop.name == names[s] && slot_of[s] < 0 && !prop.list_count_type) {
        slot_of[s] = static_cast<int>(p);
        used = true;
      }
    }
    if (!used) warn("ignoring vertex property '" + prop.name + "'");
  }
  for (int s = X; s <= Z; ++s)
    if (slot_of[s] < 0) throw Error(ErrorKind::ParseError, "vertex element lacks '" + std::string(names[s]) + "'");
  for (int s = R; s <= B; ++s) {
    if (slot_of[s] < 0) throw Error(ErrorKind::ColorMissing, "vertex element lacks '" + std::string(names[s]) + "'");
    if (vertex->properties[static_cast<std::size_t>(slot_of[s])].type != Scalar::UInt8)
      throw Error(ErrorKind::ParseError, "color property '" + std::string(names[s]) + "' is not uchar");
  }
  if (vertex->count == 0) throw Error(ErrorKind::EmptyCloud, "PLY declares zero vertices");

  PayloadReader reader(std::string_view(data).substr(header.payload_offset), header.format);
  std::vector<Point3> positions;
  std::vector<Rgb> colors;
  auto skip_entry = [&](const Element& e) {
    for (const auto& prop : e.properties) {
      if (prop.list_count_type) {
        const double n = reader.read(*prop.list_count_type);
        if (n < 0) throw Error(ErrorKind::ParseError, "negative list length");
        for (std::size_t k = 0; k < static_cast<std::size_t>(n); ++k) reader.read(prop.type);
      } else {
        reader.read(prop.type);
      }
    }
  };

  for (const auto& e : header.elements) {
    if (&e != vertex) {
      for (std::size_t i = 0; i < e.count; ++i) skip_entry(e);
      continue;
    }
    positions.reserve(e.count);
    colors.reserve(e.count);
    std::vector<double> values(e.properties.size());
    for (std::size_t i = 0; i < e.count; ++i) {
      for (std::size_t p = 0; p < e.properties.size(); ++p) {
        const auto& prop = e.properties[p];
        if (prop.list_count_type) {
          const double n = reader.read(*prop.list_count_type);
          for (std::size_t k = 0; k < static_cast<std::size_t>(n); ++k) reader.read(prop.type);
        } else {
          values[p] = reader.read(prop.type);
        }
      }
      positions.emplace_back(values[static_cast<std::size_t>(slot_of[X])], values[static_cast<std::size_t>(slot_of[Y])],
                             values[static_cast<std::size_t>(slot_of[Z])]);
      Rgb rgb{};
      for (int s = R; s <= B; ++s) {
        const double c = values[static_cast<std::size_t>(slot_of[s])];
        if (!(c >= 0.0 && c <= 255.0) || c != static_cast<double>(static_cast<int>(c)))
          throw Error(ErrorKind::ParseError, "color value out of uchar range");
        rgb[static_cast<std::size_t>(s - R)] = static_cast<std::uint8_t>(c);
      }
      colors.push_back(rgb);
    }
  }
  return PointCloud(std::move(positions), std::move(colors));
}

/// Writes x/y/z as double and red/green/blue as uchar.
inline void save_ply(const std::filesystem::path& path, const PointCloud& cloud,
                     PlyFormat format = PlyFormat::BinaryLittleEndian) {
  std::string out = "ply\nformat ";
  out += format == PlyFormat::Ascii ? "ascii 1.0\n" : "binary_little_endian 1.0\n";
  out += "element vertex " + std::to_string(cloud.size()) + "\n";
  out += "property double x\nproperty double y\nproperty double z\n";
  out += "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point3& p = cloud.position(i);
    const Rgb& c = cloud.colors()[i];
    if (format == PlyFormat::Ascii) {
      for (int a = 0; a < 3; ++a) {
        ply_detail::write_number(out, p[a]);
        out += ' ';
      }
      out += std::to_string(c[0]) + ' ' + std::to_string(c[1]) + ' ' + std::to_string(c[2]) + '\n';
    } else {
      for (int a = 0; a < 3; ++a) {
        const double v = p[a];
        out.append(reinterpret_cast<const char*>(&v), sizeof v);
      }
      out.append(reinterpret_cast<const char*>(c.data()), 3);
    }
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw Error(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

}  // namespace phm
