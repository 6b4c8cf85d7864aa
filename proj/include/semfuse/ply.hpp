#pragma once

// PLY reader/writer for SemanticMesh.
//
// Reads ASCII and binary little-endian files with arbitrary extra elements
// and properties. Recognized vertex properties: x, y, z, an optional uchar
// `label` (ground truth class index) and optional float `prob_<class>`
// properties (fused class distribution, one per class). Faces with more than
// three vertices are fan-triangulated.

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "semfuse/error.hpp"
#include "semfuse/geometry.hpp"

namespace semfuse::ply {

enum class Encoding { kAscii, kBinaryLittleEndian };

namespace detail {

enum class Scalar { kInt8, kUInt8, kInt16, kUInt16, kInt32, kUInt32, kFloat32, kFloat64 };

inline Scalar parse_scalar(const std::string& s) {
  static const std::map<std::string, Scalar> kTypes = {
      {"char", Scalar::kInt8},     {"int8", Scalar::kInt8},      {"uchar", Scalar::kUInt8},
      {"uint8", Scalar::kUInt8},   {"short", Scalar::kInt16},    {"int16", Scalar::kInt16},
      {"ushort", Scalar::kUInt16}, {"uint16", Scalar::kUInt16},  {"int", Scalar::kInt32},
      {"int32", Scalar::kInt32},   {"uint", Scalar::kUInt32},    {"uint32", Scalar::kUInt32},
      {"float", Scalar::kFloat32}, {"float32", Scalar::kFloat32}, {"double", Scalar::kFloat64},
      {"float64", Scalar::kFloat64}};
  auto it = kTypes.find(s);
  if (it == kTypes.end()) throw FormatError("ply", "unknown property type '" + s + "'");
  return it->second;
}

inline std::size_t scalar_size(Scalar s) {
  switch (s) {
    case Scalar::kInt8:
    case Scalar::kUInt8: return 1;
    case Scalar::kInt16:
    case Scalar::kUInt16: return 2;
    case Scalar::kInt32:
    case Scalar::kUInt32:
    case Scalar::kFloat32: return 4;
    case Scalar::kFloat64: return 8;
  }
  return 0;
}

struct Property {
  std::string name;
  Scalar type;
  bool is_list = false;
  Scalar count_type = Scalar::kUInt8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

static_assert(std::endian::native == std::endian::little, "binary PLY I/O assumes a little-endian host");

class Reader {
 public:
  Reader(std::istream& in, Encoding enc) : in_(in), enc_(enc) {}

  double read(Scalar s) {
    if (enc_ == Encoding::kAscii) {
      double v;
      if (!(in_ >> v)) throw FormatError("ply", "truncated ASCII body");
      return v;
    }
    char buf[8];
    const auto n = scalar_size(s);
    if (!in_.read(buf, static_cast<std::streamsize>(n))) {
      throw FormatError("ply", "truncated binary body");
    }
    switch (s) {
      case Scalar::kInt8: return static_cast<double>(static_cast<std::int8_t>(buf[0]));
      case Scalar::kUInt8: return static_cast<double>(static_cast<std::uint8_t>(buf[0]));
      case Scalar::kInt16: return load<std::int16_t>(buf);
      case Scalar::kUInt16: return load<std::uint16_t>(buf);
      case Scalar::kInt32: return load<std::int32_t>(buf);
      case Scalar::kUInt32: return load<std::uint32_t>(buf);
      case Scalar::kFloat32: return load<float>(buf);
      case Scalar::kFloat64: return load<double>(buf);
    }
    return 0.0;
  }

 private:
  template <typename T>
  static double load(const char* buf) {
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return static_cast<double>(v);
  }

  std::istream& in_;
  Encoding enc_;
};

}  // namespace detail

inline SemanticMesh read(std::istream& in) {
  using namespace detail;
  std::string line;
  if (!std::getline(in, line) || line.rfind("ply", 0) != 0) {
    throw FormatError("ply", "missing 'ply' magic");
  }
  Encoding enc = Encoding::kAscii;
  std::vector<Element> elements;
  bool header_done = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw.empty() || kw == "comment" || kw == "obj_info") continue;
    if (kw == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "ascii") {
        enc = Encoding::kAscii;
      } else if (fmt == "binary_little_endian") {
        enc = Encoding::kBinaryLittleEndian;
      } else {
        throw FormatError("ply", "unsupported format '" + fmt + "'");
      }
    } else if (kw == "element") {
      Element e;
      ls >> e.name >> e.count;
      if (!ls) throw FormatError("ply", "malformed element line: " + line);
      elements.push_back(std::move(e));
    } else if (kw == "property") {
      if (elements.empty()) throw FormatError("ply", "property before element");
      Property p;
      std::string type;
      ls >> type;
      if (type == "list") {
        std::string count_type, item_type;
        ls >> count_type >> item_type >> p.name;
        p.is_list = true;
        p.count_type = parse_scalar(count_type);
        p.type = parse_scalar(item_type);
      } else {
        p.type = parse_scalar(type);
        ls >> p.name;
      }
      if (p.name.empty()) throw FormatError("ply", "malformed property line: " + line);
      elements.back().properties.push_back(std::move(p));
    } else if (kw == "end_header") {
      header_done = true;
      break;
    } else {
      throw FormatError("ply", "unexpected header keyword '" + kw + "'");
    }
  }
  if (!header_done) throw FormatError("ply", "missing end_header");

  SemanticMesh mesh;
  std::vector<std::string> prob_names;
  Reader reader(in, enc);
  for (const auto& e : elements) {
    const bool is_vertex = e.name == "vertex";
    const bool is_face = e.name == "face";
    int ix = -1, iy = -1, iz = -1, ilabel = -1;
    std::vector<int> iprob;
    if (is_vertex) {
      for (int i = 0; i < static_cast<int>(e.properties.size()); ++i) {
        const auto& n = e.properties[i].name;
        if (n == "x") ix = i;
        else if (n == "y") iy = i;
        else if (n == "z") iz = i;
        else if (n == "label") ilabel = i;
        else if (n.rfind("prob_", 0) == 0) {
          iprob.push_back(i);
          prob_names.push_back(n.substr(5));
        }
      }
      if (ix < 0 || iy < 0 || iz < 0) throw FormatError("ply", "vertex element lacks x/y/z");
      mesh.vertices.reserve(e.count);
      if (ilabel >= 0) mesh.labels.reserve(e.count);
      mesh.num_classes = iprob.size();
      mesh.probabilities.reserve(e.count * iprob.size());
    }
    std::vector<double> values(e.properties.size());
    std::vector<std::uint32_t> poly;
    for (std::size_t r = 0; r < e.count; ++r) {
      for (std::size_t pi = 0; pi < e.properties.size(); ++pi) {
        const auto& p = e.properties[pi];
        if (!p.is_list) {
          values[pi] = reader.read(p.type);
          continue;
        }
        const double cnt = reader.read(p.count_type);
        if (cnt < 0 || cnt > 1e6) throw FormatError("ply", "implausible list length");
        poly.clear();
        for (std::size_t k = 0; k < static_cast<std::size_t>(cnt); ++k) {
          const double idx = reader.read(p.type);
          if (idx < 0) throw FormatError("ply", "negative face index");
          poly.push_back(static_cast<std::uint32_t>(idx));
        }
        if (is_face && (p.name == "vertex_indices" || p.name == "vertex_index")) {
          for (std::size_t k = 2; k < poly.size(); ++k) {
            mesh.triangles.push_back({poly[0], poly[k - 1], poly[k]});
          }
        }
      }
      if (is_vertex) {
        mesh.vertices.emplace_back(values[ix], values[iy], values[iz]);
        if (ilabel >= 0) mesh.labels.push_back(static_cast<std::uint8_t>(values[ilabel]));
        for (int i : iprob) mesh.probabilities.push_back(values[i]);
      }
    }
  }
  mesh.validate();
  return mesh;
}

inline SemanticMesh read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("ply", "cannot open '" + path + "'");
  return read(in);
}

struct WriteOptions {
  Encoding encoding = Encoding::kBinaryLittleEndian;
  bool labels = true;         // write `label` when the mesh has labels
  bool probabilities = true;  // write `prob_<class>` when the mesh has distributions
  const ClassSet* class_set = nullptr;  // names for prob_ properties; indices otherwise
};

inline void write(std::ostream& out, const SemanticMesh& mesh, const WriteOptions& opt = {}) {
  const bool with_labels = opt.labels && mesh.has_labels();
  const bool with_probs = opt.probabilities && mesh.has_distributions();
  const bool binary = opt.encoding == Encoding::kBinaryLittleEndian;

  out << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n";
  out << "element vertex " << mesh.vertices.size() << "\n";
  out << "property double x\nproperty double y\nproperty double z\n";
  if (with_labels) out << "property uchar label\n";
  if (with_probs) {
    for (std::size_t c = 0; c < mesh.num_classes; ++c) {
      std::string name = (opt.class_set && c < opt.class_set->size()) ? opt.class_set->name(c)
                                                                       : std::to_string(c);
      for (auto& ch : name) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
      out << "property float prob_" << name << "\n";
    }
  }
  out << "element face " << mesh.triangles.size() << "\n";
  out << "property list uchar uint vertex_indices\nend_header\n";

  auto put = [&out](const auto& v) { out.write(reinterpret_cast<const char*>(&v), sizeof(v)); };
  if (!binary) out.precision(17);
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const auto& v = mesh.vertices[i];
    if (binary) {
      put(v.x());
      put(v.y());
      put(v.z());
      if (with_labels) put(mesh.labels[i]);
      if (with_probs) {
        for (double p : mesh.distribution(i)) put(static_cast<float>(p));
      }
    } else {
      out << v.x() << ' ' << v.y() << ' ' << v.z();
      if (with_labels) out << ' ' << static_cast<int>(mesh.labels[i]);
      if (with_probs) {
        out.precision(9);
        for (double p : mesh.distribution(i)) out << ' ' << static_cast<float>(p);
        out.precision(17);
      }
      out << '\n';
    }
  }
  for (const auto& t : mesh.triangles) {
    if (binary) {
      put(std::uint8_t{3});
      for (auto i : t) put(i);
    } else {
      out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    }
  }
}

inline void write_file(const std::string& path, const SemanticMesh& mesh,
                       const WriteOptions& opt = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("ply", "cannot write '" + path + "'");
  write(out, mesh, opt);
  if (!out) throw FormatError("ply", "write failed for '" + path + "'");
}

}  // namespace semfuse::ply
