#include "semloc/neighbors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "semloc/io.hpp"
#include "semloc/rand.hpp"

namespace semloc {

const char* to_string(Metric m) {
  return m == Metric::euclidean ? "euclidean" : "cosine";
}

const char* to_string(NeighborSource s) {
  return s == NeighborSource::text_omega ? "text_omega" : "image_visual";
}

const char* to_string(IndexMode m) {
  return m == IndexMode::exact ? "exact" : "approximate";
}

Metric metric_from_string(const std::string& s) {
  if (s == "euclidean") return Metric::euclidean;
  if (s == "cosine") return Metric::cosine;
  fail(ErrorKind::ConfigInvalid, "unknown metric: " + s);
}

NeighborSource neighbor_source_from_string(const std::string& s) {
  if (s == "text_omega") return NeighborSource::text_omega;
  if (s == "image_visual") return NeighborSource::image_visual;
  fail(ErrorKind::ConfigInvalid, "unknown neighbor source: " + s);
}

IndexMode index_mode_from_string(const std::string& s) {
  if (s == "exact") return IndexMode::exact;
  if (s == "approximate") return IndexMode::approximate;
  fail(ErrorKind::ConfigInvalid, "unknown index mode: " + s);
}

double NeighborIndex::dist(int a, int b) const {
  if (config_.metric == Metric::euclidean) {
    return std::sqrt(squared_euclidean(points_[a], points_[b]));
  }
  return 1.0 - cosine_similarity(points_[a], points_[b]);
}

NeighborIndex NeighborIndex::build(const SemanticSpace& space,
                                   const IndexConfig& config) {
  if (space.size() < 2) {
    fail(ErrorKind::TooFewVectors, "an index needs at least two vectors");
  }
  if (config.max_degree < 1 || config.build_beam < 1 ||
      config.query_beam < 1) {
    fail(ErrorKind::ConfigInvalid, "index beam and degree must be positive");
  }
  NeighborIndex idx;
  idx.config_ = config;
  idx.ids_ = space.ids;
  idx.points_ = space.vectors;
  idx.lookup_ = space.index;
  if (config.metric == Metric::cosine) {
    for (std::size_t i = 0; i < idx.points_.size(); ++i) {
      if (norm(idx.points_[i]) < 1e-12) {
        fail(ErrorKind::ZeroVector,
             "cosine metric rejects zero vector: " + idx.ids_[i]);
      }
    }
  }
  if (config.mode == IndexMode::approximate) {
    idx.levels_.assign(idx.points_.size(), 0);
    idx.links_.resize(idx.points_.size());
    std::mt19937_64 rng = make_rng(config.seed, 17);
    for (int q = 0; q < (int)idx.points_.size(); ++q) {
      idx.insert_graph(q, rng);
    }
  }
  return idx;
}

std::vector<int> NeighborIndex::search_layer(int q, std::vector<int> entries,
                                             int beam, int layer,
                                             int skip) const {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<char> visited(points_.size(), 0);
  using DI = std::pair<double, int>;
  std::priority_queue<DI, std::vector<DI>, std::greater<DI>> frontier;
  std::priority_queue<DI> best;  // max-heap keeps the beam's worst on top

  for (int e : entries) {
    if (visited[e]) continue;
    visited[e] = 1;
    const double d = dist(q, e);
    frontier.push({d, e});
    if (e != skip) best.push({d, e});
  }
  while (!frontier.empty()) {
    const auto [dc, c] = frontier.top();
    frontier.pop();
    if ((int)best.size() >= beam && dc > best.top().first) break;
    for (int nb : links_[c][layer]) {
      if (visited[nb]) continue;
      visited[nb] = 1;
      const double d = dist(q, nb);
      if ((int)best.size() < beam || d < best.top().first) {
        frontier.push({d, nb});
        if (nb != skip) {
          best.push({d, nb});
          if ((int)best.size() > beam) best.pop();
        }
      }
    }
  }
  std::vector<DI> out;
  out.reserve(best.size());
  while (!best.empty()) {
    out.push_back(best.top());
    best.pop();
  }
  std::sort(out.begin(), out.end());
  std::vector<int> nodes;
  nodes.reserve(out.size());
  for (const DI& di : out) nodes.push_back(di.second);
  return nodes;
}

std::vector<int> NeighborIndex::select_neighbors(int base,
                                                 const std::vector<int>& sorted,
                                                 int limit) const {
  // Diversity pruning: a candidate is kept only if no already-kept neighbor
  // is closer to it than the base point is.
  std::vector<int> result;
  std::vector<int> skipped;
  for (int c : sorted) {
    if ((int)result.size() >= limit) break;
    const double d_cb = dist(c, base);
    bool keep = true;
    for (int r : result) {
      if (dist(c, r) < d_cb) {
        keep = false;
        break;
      }
    }
    if (keep) {
      result.push_back(c);
    } else {
      skipped.push_back(c);
    }
  }
  for (int s : skipped) {
    if ((int)result.size() >= limit) break;
    result.push_back(s);
  }
  return result;
}

void NeighborIndex::insert_graph(int q, std::mt19937_64& rng) {
  const double mult = 1.0 / std::log(std::max(2, config_.max_degree));
  double u = uniform01(rng);
  while (u <= 0.0) u = uniform01(rng);
  const int level = (int)std::floor(-std::log(u) * mult);
  levels_[q] = level;
  links_[q].assign(level + 1, {});

  if (entry_ < 0) {
    entry_ = q;
    max_level_ = level;
    return;
  }
  int ep = entry_;
  for (int l = max_level_; l > level; --l) {
    const std::vector<int> res = search_layer(q, {ep}, 1, l, -1);
    if (!res.empty()) ep = res[0];
  }
  for (int l = std::min(level, max_level_); l >= 0; --l) {
    std::vector<int> cands = search_layer(q, {ep}, config_.build_beam, l, -1);
    const int limit = l == 0 ? 2 * config_.max_degree : config_.max_degree;
    std::vector<int> selected = select_neighbors(q, cands, limit);
    links_[q][l] = selected;
    for (int s : selected) {
      links_[s][l].push_back(q);
      if ((int)links_[s][l].size() > limit) {
        std::vector<int> nbrs = links_[s][l];
        std::sort(nbrs.begin(), nbrs.end(), [&](int a, int b) {
          const double da = dist(s, a);
          const double db = dist(s, b);
          if (da != db) return da < db;
          return a < b;
        });
        links_[s][l] = select_neighbors(s, nbrs, limit);
      }
    }
    if (!cands.empty()) ep = cands[0];
  }
  if (level > max_level_) {
    max_level_ = level;
    entry_ = q;
  }
}

std::vector<Neighbor> NeighborIndex::query_exact(int qi, int k) const {
  // Selection runs on squared distances for the euclidean metric; the
  // reported distance applies the square root afterwards. Ordering and ties
  // are unchanged by the monotone map.
  const bool euclid = config_.metric == Metric::euclidean;
  std::vector<std::pair<double, int>> cands;
  cands.reserve(points_.size() - 1);
  for (int j = 0; j < (int)points_.size(); ++j) {
    if (j == qi) continue;
    const double d = euclid ? squared_euclidean(points_[qi], points_[j])
                            : 1.0 - cosine_similarity(points_[qi], points_[j]);
    cands.emplace_back(d, j);
  }
  const auto cmp = [&](const std::pair<double, int>& a,
                       const std::pair<double, int>& b) {
    if (a.first != b.first) return a.first < b.first;
    return ids_[a.second] < ids_[b.second];
  };
  const std::size_t keep = std::min<std::size_t>(k, cands.size());
  std::partial_sort(cands.begin(), cands.begin() + keep, cands.end(), cmp);
  std::vector<Neighbor> out;
  out.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    const double d = euclid ? std::sqrt(cands[i].first) : cands[i].first;
    out.push_back({ids_[cands[i].second], d});
  }
  return out;
}

std::vector<Neighbor> NeighborIndex::query_graph(int qi, int k) const {
  int ep = entry_;
  for (int l = max_level_; l >= 1; --l) {
    const std::vector<int> res = search_layer(qi, {ep}, 1, l, qi);
    if (!res.empty()) ep = res[0];
  }
  const int beam = std::max(config_.query_beam, k + 1);
  const std::vector<int> found = search_layer(qi, {ep}, beam, 0, qi);
  std::vector<Neighbor> out;
  out.reserve(found.size());
  for (int j : found) out.push_back({ids_[j], dist(qi, j)});
  std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.id < b.id;
  });
  if ((int)out.size() > k) out.resize(k);
  return out;
}

std::vector<Neighbor> NeighborIndex::query(const std::string& id,
                                           int k) const {
  if (k < 1) fail(ErrorKind::ConfigInvalid, "k must be >= 1");
  const auto it = lookup_.find(id);
  if (it == lookup_.end()) {
    fail(ErrorKind::UnknownId, "id not in index: " + id);
  }
  return config_.mode == IndexMode::exact ? query_exact(it->second, k)
                                          : query_graph(it->second, k);
}

const std::vector<Neighbor>* NeighborTable::find(const std::string& id) const {
  const auto it = index.find(id);
  return it == index.end() ? nullptr : &rows[it->second];
}

const std::vector<Neighbor>& NeighborTable::at(const std::string& id) const {
  const std::vector<Neighbor>* row = find(id);
  if (!row) fail(ErrorKind::UnknownId, "id not in neighbor table: " + id);
  return *row;
}

NeighborTable build_neighbor_table(const SemanticSpace& space,
                                   const IndexConfig& config, int k) {
  if (k < 1) fail(ErrorKind::ConfigInvalid, "k must be >= 1");
  const NeighborIndex idx = NeighborIndex::build(space, config);
  NeighborTable table;
  table.metric = config.metric;
  table.source = space.source == SpaceSource::visual_features
                     ? NeighborSource::image_visual
                     : NeighborSource::text_omega;
  table.k = k;
  table.ids = space.ids;
  table.rows.reserve(space.size());
  for (const std::string& id : space.ids) {
    table.rows.push_back(idx.query(id, k));
  }
  for (std::size_t i = 0; i < table.ids.size(); ++i) {
    table.index.emplace(table.ids[i], (int)i);
  }
  return table;
}

void save_neighbor_table(const NeighborTable& table, const std::string& path) {
  std::vector<Json> rows;
  rows.reserve(table.ids.size());
  for (std::size_t i = 0; i < table.ids.size(); ++i) {
    Json neighbors = Json::array();
    Json distances = Json::array();
    for (const Neighbor& nb : table.rows[i]) {
      neighbors.push_back(nb.id);
      distances.push_back(nb.distance);
    }
    rows.push_back(Json{{"id", table.ids[i]},
                        {"neighbors", neighbors},
                        {"distances", distances}});
  }
  write_jsonl(path, rows);
}

NeighborTable load_neighbor_table(const std::string& path, Metric metric,
                                  NeighborSource source) {
  NeighborTable table;
  table.metric = metric;
  table.source = source;
  for (const Json& row : read_jsonl(path)) {
    if (!row.is_object() || !row.contains("id") || !row.contains("neighbors") ||
        !row.contains("distances") || !row["id"].is_string() ||
        !row["neighbors"].is_array() || !row["distances"].is_array()) {
      fail(ErrorKind::ParseError,
           path + ": rows must carry id, neighbors, distances");
    }
    if (row["neighbors"].size() != row["distances"].size()) {
      fail(ErrorKind::ParseError,
           path + ": neighbors and distances differ in length for id " +
               row["id"].get<std::string>());
    }
    const std::string id = row["id"].get<std::string>();
    if (table.index.count(id)) {
      fail(ErrorKind::DuplicateId, path + ": duplicate id " + id);
    }
    std::vector<Neighbor> nbrs;
    nbrs.reserve(row["neighbors"].size());
    for (std::size_t i = 0; i < row["neighbors"].size(); ++i) {
      if (!row["neighbors"][i].is_string() ||
          !row["distances"][i].is_number()) {
        fail(ErrorKind::ParseError, path + ": malformed neighbor entry");
      }
      nbrs.push_back({row["neighbors"][i].get<std::string>(),
                      row["distances"][i].get<double>()});
    }
    table.index.emplace(id, (int)table.ids.size());
    table.ids.push_back(id);
    table.rows.push_back(std::move(nbrs));
    table.k = std::max<int>(table.k, (int)table.rows.back().size());
  }
  return table;
}

std::string sample_neighbor_pair(const std::vector<Neighbor>& row,
                                 std::mt19937_64& rng) {
  if (row.empty()) {
    fail(ErrorKind::EmptyNeighborhood, "cannot sample from an empty neighborhood");
  }
  return row[uniform_index(rng, row.size())].id;
}

std::string sample_neighbor_pair(const NeighborTable& table,
                                 const std::string& id, std::mt19937_64& rng) {
  return sample_neighbor_pair(table.at(id), rng);
}

SemanticSpace neighbor_source_variant(const PairDataset& dataset,
                                      const SemanticSpace* omega,
                                      NeighborSource source) {
  if (source == NeighborSource::text_omega) {
    if (!omega || omega->size() == 0) {
      fail(ErrorKind::MissingFeatures,
           "text_omega needs a document embedding space");
    }
    return *omega;
  }
  return image_feature_space(dataset);
}

}  // namespace semloc
