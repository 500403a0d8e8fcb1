#include "semloc/data.hpp"

#include <algorithm>
#include <cmath>

#include "semloc/io.hpp"
#include "semloc/rand.hpp"

namespace semloc {

const PairRecord* PairDataset::find(const std::string& id) const {
  const auto it = index.find(id);
  return it == index.end() ? nullptr : &records[it->second];
}

const PairRecord& PairDataset::at(const std::string& id) const {
  const PairRecord* r = find(id);
  if (!r) fail(ErrorKind::UnknownId, "no record for id: " + id);
  return *r;
}

int PairDataset::image_dim() const {
  return records.empty() ? 0 : (int)records[0].image_feature.size();
}

int PairDataset::text_dim() const {
  for (const PairRecord& r : records) {
    if (r.has_text_feature()) return (int)r.text_feature.size();
  }
  return 0;
}

PairDataset make_dataset(std::vector<PairRecord> records) {
  PairDataset ds;
  ds.records = std::move(records);
  int image_dim = -1;
  int text_dim = -1;
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const PairRecord& r = ds.records[i];
    if (ds.index.count(r.id)) {
      fail(ErrorKind::DuplicateId, "duplicate record id: " + r.id);
    }
    if (r.image_feature.empty()) {
      fail(ErrorKind::MissingFeatures, "record " + r.id + " lacks an image feature");
    }
    if (!r.has_text_feature() && !r.has_tokens()) {
      fail(ErrorKind::MissingFeatures,
           "record " + r.id + " lacks both text tokens and a text feature");
    }
    if (!all_finite(r.image_feature) || !all_finite(r.text_feature)) {
      fail(ErrorKind::ParseError, "non-finite feature in record " + r.id);
    }
    if (image_dim < 0) image_dim = (int)r.image_feature.size();
    if ((int)r.image_feature.size() != image_dim) {
      fail(ErrorKind::DimensionMismatch,
           "image feature of " + r.id + " has dimension " +
               std::to_string(r.image_feature.size()) + ", expected " +
               std::to_string(image_dim));
    }
    if (r.has_text_feature()) {
      if (text_dim < 0) text_dim = (int)r.text_feature.size();
      if ((int)r.text_feature.size() != text_dim) {
        fail(ErrorKind::DimensionMismatch,
             "text feature of " + r.id + " has dimension " +
                 std::to_string(r.text_feature.size()) + ", expected " +
                 std::to_string(text_dim));
      }
    }
    ds.index.emplace(r.id, (int)i);
  }
  return ds;
}

PairDataset generate_synthetic(const SyntheticConfig& config) {
  if (config.topics < 1 || config.modes_per_topic < 1 || config.pairs < 1) {
    fail(ErrorKind::ConfigInvalid, "topics, modes and pairs must be positive");
  }
  if (config.text_dim < config.topics) {
    fail(ErrorKind::ConfigInvalid,
         "text_dim must be at least the topic count");
  }
  if (config.image_dim < config.topics * config.modes_per_topic) {
    fail(ErrorKind::ConfigInvalid,
         "image_dim must be at least topics * modes_per_topic");
  }
  if (config.sigma_text < 0.0 || config.sigma_image < 0.0) {
    fail(ErrorKind::ConfigInvalid, "noise sigmas must be nonnegative");
  }
  if (config.tokens_per_doc > 0 && config.vocab_per_topic < 1) {
    fail(ErrorKind::ConfigInvalid,
         "token emission needs vocab_per_topic >= 1");
  }

  // Orthogonal centers of norm r are sqrt(2) * r apart; r is chosen so the
  // pairwise separation is at least ten noise standard deviations.
  const double r_text = std::max(10.0 * config.sigma_text / std::sqrt(2.0), 1.0);
  const double r_image =
      std::max(10.0 * config.sigma_image / std::sqrt(2.0), 1.0);

  std::mt19937_64 rng = make_rng(config.seed, 19);
  std::vector<PairRecord> records;
  records.reserve(config.pairs);
  char idbuf[16];
  for (int i = 0; i < config.pairs; ++i) {
    std::snprintf(idbuf, sizeof(idbuf), "p%05d", i);
    PairRecord rec;
    rec.id = idbuf;
    const int topic = (int)uniform_index(rng, config.topics);
    const int mode = (int)uniform_index(rng, config.modes_per_topic);
    rec.topic_label = topic;

    rec.text_feature.assign(config.text_dim, 0.0);
    rec.text_feature[topic] = r_text;
    for (double& x : rec.text_feature) x += config.sigma_text * gaussian(rng);

    rec.image_feature.assign(config.image_dim, 0.0);
    rec.image_feature[topic * config.modes_per_topic + mode] = r_image;
    for (double& x : rec.image_feature) {
      x += config.sigma_image * gaussian(rng);
    }

    if (config.tokens_per_doc > 0) {
      rec.text_tokens.reserve(config.tokens_per_doc);
      for (int t = 0; t < config.tokens_per_doc; ++t) {
        const int w = (int)uniform_index(rng, config.vocab_per_topic);
        rec.text_tokens.push_back("t" + std::to_string(topic) + "_w" +
                                  std::to_string(w));
      }
    }
    records.push_back(std::move(rec));
  }
  return make_dataset(std::move(records));
}

PairDataset load_dataset(const std::string& features_path,
                         const std::string& corpus_path) {
  std::vector<PairRecord> records;
  for (const Json& row : read_jsonl(features_path)) {
    if (!row.is_object() || !row.contains("id") || !row["id"].is_string()) {
      fail(ErrorKind::ParseError, features_path + ": rows need a string id");
    }
    PairRecord rec;
    rec.id = row["id"].get<std::string>();
    if (!row.contains("image_feature")) {
      fail(ErrorKind::MissingFeatures,
           features_path + ": record " + rec.id + " lacks image_feature");
    }
    if (!row["image_feature"].is_array()) {
      fail(ErrorKind::ParseError,
           features_path + ": image_feature must be an array");
    }
    for (const Json& x : row["image_feature"]) {
      if (!x.is_number()) {
        fail(ErrorKind::ParseError,
             features_path + ": image_feature entries must be numbers");
      }
      rec.image_feature.push_back(x.get<double>());
    }
    if (row.contains("text_feature")) {
      if (!row["text_feature"].is_array()) {
        fail(ErrorKind::ParseError,
             features_path + ": text_feature must be an array");
      }
      for (const Json& x : row["text_feature"]) {
        if (!x.is_number()) {
          fail(ErrorKind::ParseError,
               features_path + ": text_feature entries must be numbers");
        }
        rec.text_feature.push_back(x.get<double>());
      }
    }
    if (row.contains("text_tokens")) {
      if (!row["text_tokens"].is_array()) {
        fail(ErrorKind::ParseError,
             features_path + ": text_tokens must be an array");
      }
      for (const Json& x : row["text_tokens"]) {
        if (!x.is_string()) {
          fail(ErrorKind::ParseError,
               features_path + ": text_tokens entries must be strings");
        }
        rec.text_tokens.push_back(x.get<std::string>());
      }
    }
    if (row.contains("topic_label")) {
      if (!row["topic_label"].is_number_integer()) {
        fail(ErrorKind::ParseError,
             features_path + ": topic_label must be an integer");
      }
      rec.topic_label = row["topic_label"].get<int>();
    }
    records.push_back(std::move(rec));
  }

  if (!corpus_path.empty()) {
    std::unordered_map<std::string, std::size_t> where;
    for (std::size_t i = 0; i < records.size(); ++i) {
      where.emplace(records[i].id, i);
    }
    for (const Json& row : read_jsonl(corpus_path)) {
      if (!row.is_object() || !row.contains("id") || !row.contains("tokens") ||
          !row["id"].is_string() || !row["tokens"].is_array()) {
        fail(ErrorKind::ParseError,
             corpus_path + ": rows must carry id and tokens");
      }
      const std::string id = row["id"].get<std::string>();
      const auto it = where.find(id);
      if (it == where.end()) {
        fail(ErrorKind::IdMismatch,
             corpus_path + ": id " + id + " is not in the features file");
      }
      std::vector<std::string> tokens;
      for (const Json& x : row["tokens"]) {
        if (!x.is_string()) {
          fail(ErrorKind::ParseError, corpus_path + ": tokens must be strings");
        }
        tokens.push_back(x.get<std::string>());
      }
      records[it->second].text_tokens = std::move(tokens);
    }
  }
  return make_dataset(std::move(records));
}

void save_dataset(const PairDataset& dataset, const std::string& path) {
  std::vector<Json> rows;
  rows.reserve(dataset.size());
  for (const PairRecord& rec : dataset.records) {
    Json row{{"id", rec.id}, {"image_feature", rec.image_feature}};
    if (rec.has_text_feature()) row["text_feature"] = rec.text_feature;
    if (rec.has_tokens()) row["text_tokens"] = rec.text_tokens;
    if (rec.topic_label) row["topic_label"] = *rec.topic_label;
    rows.push_back(std::move(row));
  }
  write_jsonl(path, rows);
}

void save_corpus(const PairDataset& dataset, const std::string& path) {
  std::vector<Json> rows;
  for (const PairRecord& rec : dataset.records) {
    if (!rec.has_tokens()) continue;
    rows.push_back(Json{{"id", rec.id}, {"tokens", rec.text_tokens}});
  }
  write_jsonl(path, rows);
}

SplitSets split_dataset(const PairDataset& dataset,
                        const std::array<double, 3>& ratios,
                        std::uint64_t seed) {
  double sum = 0.0;
  for (double r : ratios) {
    if (r < 0.0) fail(ErrorKind::ConfigInvalid, "split ratios must be >= 0");
    sum += r;
  }
  if (std::fabs(sum - 1.0) > 1e-9) {
    fail(ErrorKind::ConfigInvalid, "split ratios must sum to 1");
  }
  std::vector<std::string> ids;
  ids.reserve(dataset.size());
  for (const PairRecord& rec : dataset.records) ids.push_back(rec.id);
  std::mt19937_64 rng = make_rng(seed, 23);
  shuffle_in_place(ids, rng);

  const std::size_t n = ids.size();
  const std::size_t n_val = (std::size_t)(n * ratios[1]);
  const std::size_t n_test = (std::size_t)(n * ratios[2]);
  const std::size_t n_train = n - n_val - n_test;

  SplitSets out;
  out.train.assign(ids.begin(), ids.begin() + n_train);
  out.val.assign(ids.begin() + n_train, ids.begin() + n_train + n_val);
  out.test.assign(ids.begin() + n_train + n_val, ids.end());
  return out;
}

Corpus corpus_from_dataset(const PairDataset& dataset) {
  Corpus corpus;
  for (const PairRecord& rec : dataset.records) {
    if (rec.has_tokens()) corpus.push_back({rec.id, rec.text_tokens});
  }
  return corpus;
}

SemanticSpace text_feature_space(const PairDataset& dataset) {
  SemanticSpace space;
  space.source = SpaceSource::external_file;
  for (const PairRecord& rec : dataset.records) {
    if (!rec.has_text_feature()) {
      fail(ErrorKind::MissingFeatures,
           "record " + rec.id + " lacks a text feature");
    }
    space.add(rec.id, rec.text_feature);
  }
  return space;
}

SemanticSpace image_feature_space(const PairDataset& dataset) {
  SemanticSpace space;
  space.source = SpaceSource::visual_features;
  for (const PairRecord& rec : dataset.records) {
    if (rec.image_feature.empty()) {
      fail(ErrorKind::MissingFeatures,
           "record " + rec.id + " lacks an image feature");
    }
    space.add(rec.id, rec.image_feature);
  }
  return space;
}

}  // namespace semloc
