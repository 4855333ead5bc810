#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bodyscan/geometry.hpp"

namespace bodyscan {

enum class PlyFormat { Ascii, BinaryLittleEndian };

namespace detail {

struct PlyProperty {
  std::string name;
  std::string type;       // scalar type, or list element type
  std::string count_type; // non-empty for list properties
  bool is_list = false;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

inline std::size_t scalar_size(const std::string& type) {
  if (type == "char" || type == "uchar" || type == "int8" || type == "uint8") return 1;
  if (type == "short" || type == "ushort" || type == "int16" || type == "uint16") return 2;
  if (type == "int" || type == "uint" || type == "int32" || type == "uint32" || type == "float" ||
      type == "float32")
    return 4;
  if (type == "double" || type == "float64") return 8;
  throw IoError("unknown ply scalar type: " + type);
}

inline double read_binary_scalar(std::istream& in, const std::string& type) {
  auto read_raw = [&](auto value) -> double {
    in.read(reinterpret_cast<char*>(&value), sizeof(value));
    return static_cast<double>(value);
  };
  if (type == "char" || type == "int8") return read_raw(std::int8_t{});
  if (type == "uchar" || type == "uint8") return read_raw(std::uint8_t{});
  if (type == "short" || type == "int16") return read_raw(std::int16_t{});
  if (type == "ushort" || type == "uint16") return read_raw(std::uint16_t{});
  if (type == "int" || type == "int32") return read_raw(std::int32_t{});
  if (type == "uint" || type == "uint32") return read_raw(std::uint32_t{});
  if (type == "float" || type == "float32") return read_raw(float{});
  if (type == "double" || type == "float64") return read_raw(double{});
  throw IoError("unknown ply scalar type: " + type);
}

struct PlyHeader {
  PlyFormat format = PlyFormat::Ascii;
  std::vector<PlyElement> elements;
};

inline PlyHeader read_header(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty ply file");
  if (line.rfind("ply", 0) != 0) throw IoError("missing ply magic");
  PlyHeader header;
  bool have_format = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "comment" || word == "obj_info") continue;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "ascii") header.format = PlyFormat::Ascii;
      else if (fmt == "binary_little_endian") header.format = PlyFormat::BinaryLittleEndian;
      else throw IoError("unsupported ply format: " + fmt);
      have_format = true;
    } else if (word == "element") {
      PlyElement el;
      ls >> el.name >> el.count;
      header.elements.push_back(el);
    } else if (word == "property") {
      if (header.elements.empty()) throw IoError("property before element");
      PlyProperty prop;
      std::string type;
      ls >> type;
      if (type == "list") {
        prop.is_list = true;
        ls >> prop.count_type >> prop.type >> prop.name;
      } else {
        prop.type = type;
        ls >> prop.name;
      }
      header.elements.back().properties.push_back(prop);
    } else if (word == "end_header") {
      if (!have_format) throw IoError("ply header missing format line");
      return header;
    } else if (!word.empty()) {
      throw IoError("unexpected ply header line: " + line);
    }
  }
  throw IoError("ply header not terminated");
}

}  // namespace detail

struct PlyData {
  PointCloud cloud;
  TriangleMesh mesh;  // empty when the file holds no faces
  bool has_mesh = false;
};

/// Reads ascii / binary_little_endian PLY. Vertex properties x,y,z are
/// required; nx,ny,nz and red,green,blue are picked up when present (uchar
/// colors are scaled to [0,1]). Faces, when present, are triangulated by fan.
inline PlyData read_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  const auto header = detail::read_header(in);

  PlyData out;
  for (const auto& element : header.elements) {
    const bool is_vertex = element.name == "vertex";
    const bool is_face = element.name == "face";
    for (std::size_t row = 0; row < element.count; ++row) {
      double x = 0, y = 0, z = 0, nx = 0, ny = 0, nz = 0, r = 0, g = 0, b = 0;
      bool saw_normal = false, saw_color = false;
      std::vector<std::uint32_t> face;
      std::istringstream ls;
      if (header.format == PlyFormat::Ascii) {
        std::string line;
        do {
          if (!std::getline(in, line)) throw IoError("unexpected end of ply data");
        } while (line.find_first_not_of(" \t\r") == std::string::npos);
        ls.str(line);
      }
      auto next_scalar = [&](const std::string& type) -> double {
        if (header.format == PlyFormat::Ascii) {
          double v;
          if (!(ls >> v)) throw IoError("short ply row");
          return v;
        }
        return detail::read_binary_scalar(in, type);
      };
      for (const auto& prop : element.properties) {
        if (prop.is_list) {
          const auto n = static_cast<std::size_t>(next_scalar(prop.count_type));
          std::vector<double> values(n);
          for (auto& v : values) v = next_scalar(prop.type);
          if (is_face && (prop.name == "vertex_indices" || prop.name == "vertex_index")) {
            face.assign(values.size(), 0);
            for (std::size_t i = 0; i < values.size(); ++i)
              face[i] = static_cast<std::uint32_t>(values[i]);
          }
          continue;
        }
        const double v = next_scalar(prop.type);
        if (!is_vertex) continue;
        const bool color_byte = prop.type == "uchar" || prop.type == "uint8";
        if (prop.name == "x") x = v;
        else if (prop.name == "y") y = v;
        else if (prop.name == "z") z = v;
        else if (prop.name == "nx") { nx = v; saw_normal = true; }
        else if (prop.name == "ny") { ny = v; saw_normal = true; }
        else if (prop.name == "nz") { nz = v; saw_normal = true; }
        else if (prop.name == "red") { r = color_byte ? v / 255.0 : v; saw_color = true; }
        else if (prop.name == "green") { g = color_byte ? v / 255.0 : v; saw_color = true; }
        else if (prop.name == "blue") { b = color_byte ? v / 255.0 : v; saw_color = true; }
      }
      if (is_vertex) {
        out.cloud.points.emplace_back(x, y, z);
        if (saw_normal) out.cloud.normals.emplace_back(nx, ny, nz);
        if (saw_color) out.cloud.colors.emplace_back(r, g, b);
      } else if (is_face && face.size() >= 3) {
        for (std::size_t i = 1; i + 1 < face.size(); ++i)
          out.mesh.triangles.push_back({face[0], face[i], face[i + 1]});
        out.has_mesh = true;
      }
      if (!in) throw IoError("unexpected end of ply data");
    }
  }
  if (out.has_mesh) {
    out.mesh.vertices = out.cloud.points;
    out.mesh.prune_degenerate();
  }
  return out;
}

inline PointCloud read_ply_cloud(const std::string& path) { return read_ply(path).cloud; }

inline TriangleMesh read_ply_mesh(const std::string& path) {
  auto data = read_ply(path);
  if (!data.has_mesh) throw IoError("no face element in " + path);
  return data.mesh;
}

namespace detail {

inline void write_float_le(std::ostream& out, float v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

inline void append_cloud_header(std::ostream& out, const PointCloud& cloud) {
  out << "element vertex " << cloud.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n";
  if (cloud.has_normals()) out << "property float nx\nproperty float ny\nproperty float nz\n";
  if (cloud.has_colors())
    out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
}

inline std::uint8_t to_byte(double channel) {
  const double v = std::min(1.0, std::max(0.0, channel));
  return static_cast<std::uint8_t>(std::lround(v * 255.0));
}

}  // namespace detail

inline void write_ply(const std::string& path, const PointCloud& cloud,
                      PlyFormat format = PlyFormat::BinaryLittleEndian) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "ply\nformat "
      << (format == PlyFormat::Ascii ? "ascii" : "binary_little_endian") << " 1.0\n";
  detail::append_cloud_header(out, cloud);
  out << "end_header\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (format == PlyFormat::Ascii) {
      out << static_cast<float>(cloud.points[i].x()) << " "
          << static_cast<float>(cloud.points[i].y()) << " "
          << static_cast<float>(cloud.points[i].z());
      if (cloud.has_normals())
        out << " " << static_cast<float>(cloud.normals[i].x()) << " "
            << static_cast<float>(cloud.normals[i].y()) << " "
            << static_cast<float>(cloud.normals[i].z());
      if (cloud.has_colors())
        out << " " << int(detail::to_byte(cloud.colors[i].x())) << " "
            << int(detail::to_byte(cloud.colors[i].y())) << " "
            << int(detail::to_byte(cloud.colors[i].z()));
      out << "\n";
    } else {
      for (int k = 0; k < 3; ++k)
        detail::write_float_le(out, static_cast<float>(cloud.points[i][k]));
      if (cloud.has_normals())
        for (int k = 0; k < 3; ++k)
          detail::write_float_le(out, static_cast<float>(cloud.normals[i][k]));
      if (cloud.has_colors()) {
        for (int k = 0; k < 3; ++k) {
          const std::uint8_t b = detail::to_byte(cloud.colors[i][k]);
          out.write(reinterpret_cast<const char*>(&b), 1);
        }
      }
    }
  }
  if (!out) throw IoError("write failed: " + path);
}

inline void write_ply(const std::string& path, const TriangleMesh& mesh,
                      PlyFormat format = PlyFormat::BinaryLittleEndian) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "ply\nformat "
      << (format == PlyFormat::Ascii ? "ascii" : "binary_little_endian") << " 1.0\n"
      << "element vertex " << mesh.vertices.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "element face " << mesh.triangles.size() << "\n"
      << "property list uchar uint vertex_indices\nend_header\n";
  for (const auto& v : mesh.vertices) {
    if (format == PlyFormat::Ascii) {
      out << static_cast<float>(v.x()) << " " << static_cast<float>(v.y()) << " "
          << static_cast<float>(v.z()) << "\n";
    } else {
      for (int k = 0; k < 3; ++k) detail::write_float_le(out, static_cast<float>(v[k]));
    }
  }
  for (const auto& t : mesh.triangles) {
    if (format == PlyFormat::Ascii) {
      out << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
    } else {
      const std::uint8_t n = 3;
      out.write(reinterpret_cast<const char*>(&n), 1);
      for (int k = 0; k < 3; ++k) {
        const std::uint32_t idx = t[k];
        out.write(reinterpret_cast<const char*>(&idx), sizeof(idx));
      }
    }
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace bodyscan
