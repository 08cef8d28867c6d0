#include "layertess/error.hpp"
#include "layertess/mesh.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace layertess {

namespace {

std::string lowercase_extension(const std::string& path)
{
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos)
    return {};
  std::string ext = path.substr(dot + 1);
  for (char& c : ext)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext;
}

Index parse_obj_index(const std::string& token, Index n_vertices, std::size_t line_no)
{
  const std::string head = token.substr(0, token.find('/'));
  long idx = 0;
  try {
    std::size_t used = 0;
    idx = std::stol(head, &used);
    if (used != head.size())
      throw std::invalid_argument(head);
  } catch (const std::exception&) {
    throw Error("parse", "bad face index '" + token + "' at line " + std::to_string(line_no));
  }
  // OBJ indices are 1-based; negative values count back from the last vertex.
  const long zero_based = idx > 0 ? idx - 1 : n_vertices + idx;
  if (idx == 0 || zero_based < 0 || zero_based >= n_vertices)
    throw Error("parse", "face index " + std::to_string(idx) + " out of range at line " +
                             std::to_string(line_no));
  return static_cast<Index>(zero_based);
}

} // namespace

TriMesh read_obj(std::istream& is)
{
  std::vector<Vec3> pos;
  std::vector<Face> faces;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#')
      continue;
    if (tag == "v") {
      Vec3 p;
      if (!(ls >> p.x >> p.y >> p.z))
        throw Error("parse", "bad vertex at line " + std::to_string(line_no));
      pos.push_back(p);
    } else if (tag == "f") {
      std::vector<Index> idx;
      std::string tok;
      while (ls >> tok)
        idx.push_back(parse_obj_index(tok, static_cast<Index>(pos.size()), line_no));
      if (idx.size() != 3)
        throw Error("non-triangular", "face with " + std::to_string(idx.size()) +
                                          " vertices at line " + std::to_string(line_no));
      faces.push_back({idx[0], idx[1], idx[2]});
    }
  }
  return make_mesh(std::move(pos), std::move(faces));
}

TriMesh read_off(std::istream& is)
{
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(is, line)) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos)
        line.erase(hash);
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        return true;
    }
    return false;
  };

  if (!next_line())
    throw Error("parse", "empty OFF file");
  std::istringstream hs(line);
  std::string magic;
  hs >> magic;
  if (magic != "OFF")
    throw Error("parse", "missing OFF header at line " + std::to_string(line_no));
  long nv = -1, nf = -1, ne = 0;
  if (!(hs >> nv)) {
    if (!next_line())
      throw Error("parse", "missing OFF counts");
    hs = std::istringstream(line);
    hs >> nv;
  }
  if (!(hs >> nf >> ne) || nv < 0 || nf < 0)
    throw Error("parse", "bad OFF counts at line " + std::to_string(line_no));

  std::vector<Vec3> pos(static_cast<std::size_t>(nv));
  for (auto& p : pos) {
    if (!next_line())
      throw Error("parse", "unexpected end of OFF vertex block");
    std::istringstream ls(line);
    if (!(ls >> p.x >> p.y >> p.z))
      throw Error("parse", "bad vertex at line " + std::to_string(line_no));
  }
  std::vector<Face> faces;
  faces.reserve(static_cast<std::size_t>(nf));
  for (long f = 0; f < nf; ++f) {
    if (!next_line())
      throw Error("parse", "unexpected end of OFF face block");
    std::istringstream ls(line);
    long count = 0;
    if (!(ls >> count))
      throw Error("parse", "bad face at line " + std::to_string(line_no));
    if (count != 3)
      throw Error("non-triangular", "face with " + std::to_string(count) + " vertices at line " +
                                        std::to_string(line_no));
    Face t{};
    for (auto& v : t) {
      long idx = -1;
      if (!(ls >> idx) || idx < 0 || idx >= nv)
        throw Error("parse", "bad face index at line " + std::to_string(line_no));
      v = static_cast<Index>(idx);
    }
    faces.push_back(t);
  }
  return make_mesh(std::move(pos), std::move(faces));
}

TriMesh load_mesh(const std::string& path, MeshFormat format)
{
  std::ifstream in(path);
  if (!in)
    throw Error("io", "cannot open mesh file '" + path + "'");
  if (format == MeshFormat::from_extension) {
    const std::string ext = lowercase_extension(path);
    if (ext == "obj")
      format = MeshFormat::obj;
    else if (ext == "off")
      format = MeshFormat::off;
    else
      throw Error("io", "unknown mesh extension for '" + path + "'");
  }
  return format == MeshFormat::obj ? read_obj(in) : read_off(in);
}

void write_obj(std::ostream& os, const TriMesh& mesh, const std::string& comment)
{
  if (!comment.empty())
    os << "# " << comment << '\n';
  char buf[96];
  for (const Vec3& p : mesh.positions) {
    std::snprintf(buf, sizeof(buf), "v %.17g %.17g %.17g\n", p.x, p.y, p.z);
    os << buf;
  }
  for (const Face& f : mesh.faces)
    os << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

} // namespace layertess
