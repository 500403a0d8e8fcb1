#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semloc/data.hpp"
#include "semloc/encoder.hpp"
#include "semloc/neighbors.hpp"
#include "semloc/space.hpp"
#include "semloc/trainer.hpp"

namespace semloc {

enum class Direction { image_to_text, text_to_image };

const char* to_string(Direction d);

struct RetrievalTask {
  Direction direction = Direction::image_to_text;
  int way_count = 5;
  int trials_per_query = 1;
  std::uint64_t seed = 0;
};

// Embeddings for the given ids, one table per modality.
SemanticSpace embed_ids(const PairDataset& dataset,
                        const std::vector<std::string>& ids,
                        const Encoder& encoder);

// Forced-choice retrieval: for each query, the true counterpart plus
// way_count - 1 uniformly sampled distractors; score 1 when the counterpart
// is the nearest. Distance ties resolve by ascending id.
double nway_recall_at_1(const SemanticSpace& queries,
                        const SemanticSpace& targets,
                        const RetrievalTask& task);  // TooFewDistractors, IdMismatch

// Mean over samples of |kNN in the learned space  ∩  kNN in the reference
// space| / k, with k truncated to size - 1. Both tables must cover the same
// ids.
double preservation_score(const SemanticSpace& m_embeddings,
                          const SemanticSpace& omega, int k = 200);  // IdMismatch

struct PairSample {
  std::string a;
  std::string b;
};

// Uniform (sample, one of its neighbors) draws from a neighbor table.
std::vector<PairSample> sample_neighbor_pairs(const NeighborTable& table,
                                              int count, std::mt19937_64& rng);

struct RatioEntry {
  std::string a;
  std::string b;
  double dist_a = 0.0;
  double dist_b = 0.0;
  double ratio = 0.0;  // dist_a / dist_b; exactly 1 when the distances tie
};

// Per-pair distance ratio between two models' embeddings of the same ids,
// sorted ascending so the head shows pairs model A holds closest together.
std::vector<RatioEntry> distance_ratio_analysis(
    const SemanticSpace& model_a, const SemanticSpace& model_b,
    const std::vector<PairSample>& pairs);  // UnknownId

struct EvalReport {
  Direction direction = Direction::image_to_text;
  int way_count = 0;
  double recall_at_1 = 0.0;
  double preservation_image = 0.0;
  double preservation_text = 0.0;
  std::uint64_t seed = 0;
  std::string config_hash;
};

Json report_to_json(const EvalReport& report);
void save_reports(const std::vector<EvalReport>& reports,
                  const std::string& path);

// Both directions for one checkpoint on its own test split.
std::vector<EvalReport> evaluate_checkpoint(const Checkpoint& ck,
                                            const PairDataset& dataset,
                                            const SemanticSpace& omega,
                                            const RetrievalTask& task,
                                            int preservation_k);

struct AblationRow {
  std::string name;
  TrainConfig config;
  std::vector<EvalReport> reports;
};

// Retrains with each neighborhood term removed in turn: full, text term off,
// image term off, both off. Seeds and data identical across variants.
std::vector<AblationRow> run_ablation(const PairDataset& dataset,
                                      const NeighborTable& table,
                                      const SemanticSpace& omega,
                                      const TrainConfig& base,
                                      const RetrievalTask& task,
                                      int preservation_k);

}  // namespace semloc
