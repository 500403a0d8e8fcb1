#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "semloc/data.hpp"
#include "semloc/space.hpp"

namespace semloc {

enum class Metric { euclidean, cosine };
enum class NeighborSource { text_omega, image_visual };
enum class IndexMode { exact, approximate };

const char* to_string(Metric m);
const char* to_string(NeighborSource s);
const char* to_string(IndexMode m);
Metric metric_from_string(const std::string& s);
NeighborSource neighbor_source_from_string(const std::string& s);
IndexMode index_mode_from_string(const std::string& s);

struct IndexConfig {
  IndexMode mode = IndexMode::exact;
  Metric metric = Metric::euclidean;
  int max_degree = 16;     // per-node fanout above the base layer
  int build_beam = 200;    // candidate pool during insertion
  int query_beam = 300;    // candidate pool during search
  std::uint64_t seed = 0;  // level assignment
};

struct Neighbor {
  std::string id;
  double distance = 0.0;
};

// k nearest neighbors under the configured metric. Exact mode scans; the
// approximate mode searches a layered proximity graph built greedily with a
// diversity-pruning neighbor selection. Distance ties always resolve by
// ascending id, and the query point itself is never returned.
class NeighborIndex {
 public:
  static NeighborIndex build(const SemanticSpace& space,
                             const IndexConfig& config);  // TooFewVectors

  std::vector<Neighbor> query(const std::string& id, int k) const;  // UnknownId
  std::size_t size() const { return ids_.size(); }
  const IndexConfig& config() const { return config_; }

 private:
  std::vector<Neighbor> query_exact(int qi, int k) const;
  std::vector<Neighbor> query_graph(int qi, int k) const;
  double dist(int a, int b) const;
  void insert_graph(int q, std::mt19937_64& rng);
  std::vector<int> search_layer(int q, std::vector<int> entries, int beam,
                                int layer, int skip) const;
  std::vector<int> select_neighbors(int base, const std::vector<int>& sorted,
                                    int limit) const;

  IndexConfig config_;
  std::vector<std::string> ids_;
  std::vector<Vec> points_;
  std::unordered_map<std::string, int> lookup_;
  // Graph state, empty in exact mode.
  std::vector<int> levels_;
  std::vector<std::vector<std::vector<int>>> links_;
  int entry_ = -1;
  int max_level_ = -1;
};

struct NeighborTable {
  std::vector<std::string> ids;
  std::vector<std::vector<Neighbor>> rows;
  std::unordered_map<std::string, int> index;
  Metric metric = Metric::euclidean;
  NeighborSource source = NeighborSource::text_omega;
  int k = 0;

  const std::vector<Neighbor>* find(const std::string& id) const;
  const std::vector<Neighbor>& at(const std::string& id) const;  // UnknownId
};

// Rows follow the space's insertion order. k larger than size-1 degrades to
// all other points.
NeighborTable build_neighbor_table(const SemanticSpace& space,
                                   const IndexConfig& config, int k);

// JSON lines {"id", "neighbors", "distances"}; metric and source are not part
// of the row format, so the loader takes them as arguments.
void save_neighbor_table(const NeighborTable& table, const std::string& path);
NeighborTable load_neighbor_table(
    const std::string& path, Metric metric = Metric::euclidean,
    NeighborSource source = NeighborSource::text_omega);

// Uniform draw from the precomputed neighborhood. The returned id names the
// image-text pair used as the semantic neighbor.
std::string sample_neighbor_pair(const std::vector<Neighbor>& row,
                                 std::mt19937_64& rng);  // EmptyNeighborhood
std::string sample_neighbor_pair(const NeighborTable& table,
                                 const std::string& id, std::mt19937_64& rng);

// Which space defines semantic neighborhoods: the document-embedding space
// handed in, or raw visual features. Downstream sampling is unchanged.
SemanticSpace neighbor_source_variant(const PairDataset& dataset,
                                      const SemanticSpace* omega,
                                      NeighborSource source);

}  // namespace semloc
