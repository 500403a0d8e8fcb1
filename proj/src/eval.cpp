#include "semloc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "semloc/rand.hpp"

namespace semloc {

const char* to_string(Direction d) {
  return d == Direction::image_to_text ? "image_to_text" : "text_to_image";
}

SemanticSpace embed_ids(const PairDataset& dataset,
                        const std::vector<std::string>& ids,
                        const Encoder& encoder) {
  SemanticSpace space;
  space.source = SpaceSource::external_file;
  for (const std::string& id : ids) {
    const PairRecord& rec = dataset.at(id);
    const Vec& feature = encoder.modality == Modality::image
                             ? rec.image_feature
                             : rec.text_feature;
    if (feature.empty()) {
      fail(ErrorKind::MissingFeatures,
           "record " + id + " lacks a " +
               std::string(to_string(encoder.modality)) + " feature");
    }
    space.add(id, encoder.encode_values(feature));
  }
  return space;
}

double nway_recall_at_1(const SemanticSpace& queries,
                        const SemanticSpace& targets,
                        const RetrievalTask& task) {
  if (task.way_count < 2) {
    fail(ErrorKind::ConfigInvalid, "way_count must be >= 2");
  }
  if (task.trials_per_query < 1) {
    fail(ErrorKind::ConfigInvalid, "trials_per_query must be >= 1");
  }
  if (queries.size() == 0) {
    fail(ErrorKind::DatasetTooSmall, "no queries to evaluate");
  }
  if (targets.size() < (std::size_t)task.way_count) {
    fail(ErrorKind::TooFewDistractors,
         "need " + std::to_string(task.way_count - 1) +
             " distractors, target table has " +
             std::to_string(targets.size()) + " entries");
  }
  for (const std::string& id : queries.ids) {
    if (!targets.find(id)) {
      fail(ErrorKind::IdMismatch, "query id missing from targets: " + id);
    }
  }

  std::vector<std::string> qids = queries.ids;
  std::sort(qids.begin(), qids.end());
  std::mt19937_64 rng =
      make_rng(task.seed,
               29 + (task.direction == Direction::image_to_text ? 0 : 1));

  std::size_t hits = 0;
  std::size_t total = 0;
  for (const std::string& qid : qids) {
    const Vec& q = queries.at(qid);
    const std::size_t gt = (std::size_t)targets.index.at(qid);
    for (int trial = 0; trial < task.trials_per_query; ++trial) {
      const std::vector<std::size_t> distractors = sample_distinct(
          rng, targets.size(), (std::size_t)task.way_count - 1, gt);
      double best_dist = squared_euclidean(q, targets.vectors[gt]);
      const std::string* best_id = &targets.ids[gt];
      for (const std::size_t j : distractors) {
        const double d = squared_euclidean(q, targets.vectors[j]);
        if (d < best_dist || (d == best_dist && targets.ids[j] < *best_id)) {
          best_dist = d;
          best_id = &targets.ids[j];
        }
      }
      if (*best_id == qid) ++hits;
      ++total;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

namespace {

// Sorted k-nearest ids within one table, ties by ascending id.
std::vector<std::string> knn_ids(const SemanticSpace& space, std::size_t qi,
                                 int k) {
  std::vector<std::pair<double, int>> cands;
  cands.reserve(space.size() - 1);
  for (std::size_t j = 0; j < space.size(); ++j) {
    if (j == qi) continue;
    cands.emplace_back(squared_euclidean(space.vectors[qi], space.vectors[j]),
                       (int)j);
  }
  const std::size_t keep = std::min<std::size_t>(k, cands.size());
  std::partial_sort(cands.begin(), cands.begin() + keep, cands.end(),
                    [&](const auto& a, const auto& b) {
                      if (a.first != b.first) return a.first < b.first;
                      return space.ids[a.second] < space.ids[b.second];
                    });
  std::vector<std::string> out;
  out.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    out.push_back(space.ids[cands[i].second]);
  }
  return out;
}

}  // namespace

double preservation_score(const SemanticSpace& m_embeddings,
                          const SemanticSpace& omega, int k) {
  if (k < 1) fail(ErrorKind::ConfigInvalid, "k must be >= 1");
  if (m_embeddings.size() != omega.size()) {
    fail(ErrorKind::IdMismatch, "spaces cover different numbers of ids");
  }
  for (const std::string& id : m_embeddings.ids) {
    if (!omega.find(id)) {
      fail(ErrorKind::IdMismatch, "id missing from reference space: " + id);
    }
  }
  const std::size_t n = m_embeddings.size();
  if (n < 2) {
    fail(ErrorKind::DatasetTooSmall,
         "preservation needs at least two samples");
  }
  const int kk = (int)std::min<std::size_t>(k, n - 1);

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::string> in_m = knn_ids(m_embeddings, i, kk);
    const std::size_t oi = (std::size_t)omega.index.at(m_embeddings.ids[i]);
    std::vector<std::string> in_omega = knn_ids(omega, oi, kk);
    std::sort(in_m.begin(), in_m.end());
    std::sort(in_omega.begin(), in_omega.end());
    std::vector<std::string> common;
    std::set_intersection(in_m.begin(), in_m.end(), in_omega.begin(),
                          in_omega.end(), std::back_inserter(common));
    total += static_cast<double>(common.size()) / static_cast<double>(kk);
  }
  return total / static_cast<double>(n);
}

std::vector<PairSample> sample_neighbor_pairs(const NeighborTable& table,
                                              int count,
                                              std::mt19937_64& rng) {
  if (table.ids.empty()) {
    fail(ErrorKind::EmptyNeighborhood, "neighbor table is empty");
  }
  std::vector<PairSample> out;
  out.reserve(count);
  for (int c = 0; c < count; ++c) {
    const std::size_t i = uniform_index(rng, table.ids.size());
    const std::string nb = sample_neighbor_pair(table.rows[i], rng);
    out.push_back({table.ids[i], nb});
  }
  return out;
}

std::vector<RatioEntry> distance_ratio_analysis(
    const SemanticSpace& model_a, const SemanticSpace& model_b,
    const std::vector<PairSample>& pairs) {
  std::vector<RatioEntry> out;
  out.reserve(pairs.size());
  for (const PairSample& p : pairs) {
    RatioEntry e;
    e.a = p.a;
    e.b = p.b;
    e.dist_a = std::sqrt(squared_euclidean(model_a.at(p.a), model_a.at(p.b)));
    e.dist_b = std::sqrt(squared_euclidean(model_b.at(p.a), model_b.at(p.b)));
    if (e.dist_a == e.dist_b) {
      e.ratio = 1.0;
    } else if (e.dist_b == 0.0) {
      e.ratio = std::numeric_limits<double>::infinity();
    } else {
      e.ratio = e.dist_a / e.dist_b;
    }
    out.push_back(std::move(e));
  }
  std::sort(out.begin(), out.end(), [](const RatioEntry& x, const RatioEntry& y) {
    if (x.ratio != y.ratio) return x.ratio < y.ratio;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });
  return out;
}

Json report_to_json(const EvalReport& r) {
  return Json{{"direction", to_string(r.direction)},
              {"way_count", r.way_count},
              {"recall_at_1", r.recall_at_1},
              {"preservation_image", r.preservation_image},
              {"preservation_text", r.preservation_text},
              {"seed", r.seed},
              {"config_hash", r.config_hash}};
}

void save_reports(const std::vector<EvalReport>& reports,
                  const std::string& path) {
  Json arr = Json::array();
  for (const EvalReport& r : reports) arr.push_back(report_to_json(r));
  write_text_file(path, arr.dump(2) + "\n");
}

std::vector<EvalReport> evaluate_checkpoint(const Checkpoint& ck,
                                            const PairDataset& dataset,
                                            const SemanticSpace& omega,
                                            const RetrievalTask& task,
                                            int preservation_k) {
  const SplitSets splits =
      split_dataset(dataset, ck.config.split_ratios, ck.config.seed);
  std::vector<std::string> test_ids = splits.test;
  std::sort(test_ids.begin(), test_ids.end());
  if (test_ids.size() < 2) {
    fail(ErrorKind::DatasetTooSmall, "test split has fewer than two pairs");
  }
  for (const std::string& id : test_ids) {
    if (!omega.find(id)) {
      fail(ErrorKind::IdMismatch,
           "test id missing from reference space: " + id);
    }
  }

  const SemanticSpace image_space =
      embed_ids(dataset, test_ids, ck.image_encoder);
  const SemanticSpace text_space =
      embed_ids(dataset, test_ids, ck.text_encoder);
  const SemanticSpace omega_test = subset(omega, test_ids);

  const double pres_image =
      preservation_score(image_space, omega_test, preservation_k);
  const double pres_text =
      preservation_score(text_space, omega_test, preservation_k);

  std::vector<EvalReport> reports;
  for (const Direction d :
       {Direction::image_to_text, Direction::text_to_image}) {
    RetrievalTask t = task;
    t.direction = d;
    const SemanticSpace& queries =
        d == Direction::image_to_text ? image_space : text_space;
    const SemanticSpace& targets =
        d == Direction::image_to_text ? text_space : image_space;
    EvalReport r;
    r.direction = d;
    r.way_count = t.way_count;
    r.recall_at_1 = nway_recall_at_1(queries, targets, t);
    r.preservation_image = pres_image;
    r.preservation_text = pres_text;
    r.seed = t.seed;
    r.config_hash = ck.hash;
    reports.push_back(std::move(r));
  }
  return reports;
}

std::vector<AblationRow> run_ablation(const PairDataset& dataset,
                                      const NeighborTable& table,
                                      const SemanticSpace& omega,
                                      const TrainConfig& base,
                                      const RetrievalTask& task,
                                      int preservation_k) {
  std::vector<AblationRow> rows;
  const auto push_variant = [&](const std::string& name, double alpha,
                                double beta) {
    TrainConfig cfg = base;
    cfg.weights.alpha_text = alpha;
    cfg.weights.beta_img = beta;
    const TrainResult result = train(dataset, table, cfg);
    AblationRow row;
    row.name = name;
    row.config = cfg;
    row.reports =
        evaluate_checkpoint(result.checkpoint, dataset, omega, task,
                            preservation_k);
    rows.push_back(std::move(row));
  };
  push_variant("full", base.weights.alpha_text, base.weights.beta_img);
  push_variant("no_text", 0.0, base.weights.beta_img);
  push_variant("no_image", base.weights.alpha_text, 0.0);
  push_variant("baseline", 0.0, 0.0);
  return rows;
}

}  // namespace semloc
