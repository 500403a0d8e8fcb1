#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "semloc/doc2vec.hpp"
#include "semloc/space.hpp"
#include "semloc/vec.hpp"

namespace semloc {

// One image-text pair. image_feature is always present; at least one of
// text_tokens / text_feature must be.
struct PairRecord {
  std::string id;
  Vec image_feature;
  std::vector<std::string> text_tokens;
  Vec text_feature;
  std::optional<int> topic_label;

  bool has_text_feature() const { return !text_feature.empty(); }
  bool has_tokens() const { return !text_tokens.empty(); }
};

struct PairDataset {
  std::vector<PairRecord> records;
  std::unordered_map<std::string, int> index;

  std::size_t size() const { return records.size(); }
  const PairRecord* find(const std::string& id) const;
  const PairRecord& at(const std::string& id) const;  // UnknownId
  int image_dim() const;
  int text_dim() const;  // 0 when no record carries a text feature
};

PairDataset make_dataset(std::vector<PairRecord> records);

// Topic-structured synthetic pairs: text features cluster around one center
// per topic, image features around one of `modes_per_topic` centers per
// topic, so one text cluster maps to several visual clusters. Centers sit on
// mutually orthogonal directions scaled so their separation is at least ten
// noise standard deviations.
struct SyntheticConfig {
  int topics = 2;
  int modes_per_topic = 1;
  int pairs = 8;
  int text_dim = 8;            // >= topics
  int image_dim = 8;           // >= topics * modes_per_topic
  double sigma_text = 0.05;
  double sigma_image = 0.05;
  int tokens_per_doc = 0;      // 0 disables token emission
  int vocab_per_topic = 8;
  std::uint64_t seed = 0;
};

PairDataset generate_synthetic(const SyntheticConfig& config);  // ConfigInvalid

// JSON lines {"id", "image_feature", "text_feature"?, "text_tokens"?,
// "topic_label"?}. The optional corpus file {"id", "tokens"} supplies tokens
// for ids already present in the features file.
PairDataset load_dataset(const std::string& features_path,
                         const std::string& corpus_path = "");
void save_dataset(const PairDataset& dataset, const std::string& path);
void save_corpus(const PairDataset& dataset, const std::string& path);

struct SplitSets {
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;
};

// Seeded shuffle, then contiguous slices. Val and test sizes round down;
// the remainder goes to train.
SplitSets split_dataset(const PairDataset& dataset,
                        const std::array<double, 3>& ratios,
                        std::uint64_t seed);

Corpus corpus_from_dataset(const PairDataset& dataset);

SemanticSpace text_feature_space(const PairDataset& dataset);   // MissingFeatures
SemanticSpace image_feature_space(const PairDataset& dataset);  // MissingFeatures

}  // namespace semloc
