#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "semloc/vec.hpp"

namespace semloc {

enum class SpaceSource { pvdm, external_file, visual_features };

const char* to_string(SpaceSource s);

// Ordered id -> vector table. Insertion order is preserved so serialization
// is deterministic.
struct SemanticSpace {
  std::vector<std::string> ids;
  std::vector<Vec> vectors;
  std::unordered_map<std::string, int> index;
  SpaceSource source = SpaceSource::external_file;

  std::size_t size() const { return ids.size(); }
  int dim() const { return vectors.empty() ? 0 : (int)vectors[0].size(); }
  const Vec* find(const std::string& id) const;
  const Vec& at(const std::string& id) const;  // UnknownId
  void add(const std::string& id, Vec v);      // DuplicateId, DimensionMismatch
};

// Restriction to the given ids, in the given order. UnknownId if absent.
SemanticSpace subset(const SemanticSpace& space,
                     const std::vector<std::string>& ids);

// JSON lines {"id": ..., "vector": [...]}.
SemanticSpace load_external_space(const std::string& path);
void save_space(const SemanticSpace& space, const std::string& path);

}  // namespace semloc
