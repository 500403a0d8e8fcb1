#include "semloc/space.hpp"

#include "semloc/io.hpp"

namespace semloc {

const char* to_string(SpaceSource s) {
  switch (s) {
    case SpaceSource::pvdm: return "pvdm";
    case SpaceSource::external_file: return "external_file";
    case SpaceSource::visual_features: return "visual_features";
  }
  return "unknown";
}

const Vec* SemanticSpace::find(const std::string& id) const {
  const auto it = index.find(id);
  return it == index.end() ? nullptr : &vectors[it->second];
}

const Vec& SemanticSpace::at(const std::string& id) const {
  const Vec* v = find(id);
  if (!v) fail(ErrorKind::UnknownId, "no vector for id: " + id);
  return *v;
}

void SemanticSpace::add(const std::string& id, Vec v) {
  if (index.count(id)) {
    fail(ErrorKind::DuplicateId, "duplicate id: " + id);
  }
  if (!vectors.empty() && v.size() != vectors[0].size()) {
    fail(ErrorKind::DimensionMismatch,
         "vector for " + id + " has dimension " + std::to_string(v.size()) +
             ", expected " + std::to_string(vectors[0].size()));
  }
  index.emplace(id, (int)ids.size());
  ids.push_back(id);
  vectors.push_back(std::move(v));
}

SemanticSpace subset(const SemanticSpace& space,
                     const std::vector<std::string>& ids) {
  SemanticSpace out;
  out.source = space.source;
  for (const std::string& id : ids) {
    const Vec* v = space.find(id);
    if (!v) fail(ErrorKind::UnknownId, "subset id missing from space: " + id);
    out.add(id, *v);
  }
  return out;
}

SemanticSpace load_external_space(const std::string& path) {
  SemanticSpace out;
  out.source = SpaceSource::external_file;
  for (const Json& row : read_jsonl(path)) {
    if (!row.is_object() || !row.contains("id") || !row.contains("vector") ||
        !row["id"].is_string() || !row["vector"].is_array()) {
      fail(ErrorKind::ParseError,
           path + ": rows must be objects with id and vector");
    }
    Vec v;
    v.reserve(row["vector"].size());
    for (const Json& x : row["vector"]) {
      if (!x.is_number()) {
        fail(ErrorKind::ParseError, path + ": vector entries must be numbers");
      }
      v.push_back(x.get<double>());
    }
    if (!all_finite(v)) {
      fail(ErrorKind::ParseError,
           path + ": non-finite value in vector for id " +
               row["id"].get<std::string>());
    }
    out.add(row["id"].get<std::string>(), std::move(v));
  }
  return out;
}

void save_space(const SemanticSpace& space, const std::string& path) {
  std::vector<Json> rows;
  rows.reserve(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    rows.push_back(Json{{"id", space.ids[i]}, {"vector", space.vectors[i]}});
  }
  write_jsonl(path, rows);
}

}  // namespace semloc
