#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "semloc/space.hpp"
#include "semloc/vec.hpp"

namespace semloc {

struct TokenDoc {
  std::string id;
  std::vector<std::string> tokens;
};

using Corpus = std::vector<TokenDoc>;

// Tokens ordered by descending frequency, ties by lexicographic order.
struct Vocabulary {
  std::vector<std::string> tokens;
  std::vector<long long> frequencies;
  std::unordered_map<std::string, int> index;
  int min_count = 1;

  int size() const { return (int)tokens.size(); }
  int lookup(const std::string& token) const;  // -1 if absent
};

Vocabulary build_vocabulary(const Corpus& corpus, int min_count);

// Binary prefix code over the vocabulary. Each leaf's path lists the internal
// nodes from the root down with the branch sign taken at each.
struct HuffmanTree {
  struct Step {
    int node = 0;
    int sign = 1;  // +1 left branch, -1 right branch
  };
  int internal_nodes = 0;  // vocabulary size - 1
  std::vector<std::vector<Step>> paths;

  int code_length(int token_index) const {
    return (int)paths[token_index].size();
  }
  double weighted_path_length(const Vocabulary& vocab) const;
};

// Ties during construction are merged in a fixed order, so equal frequencies
// still yield one specific tree.
HuffmanTree build_huffman(const Vocabulary& vocab);  // VocabularyTooSmall

struct Doc2VecConfig {
  int dim = 200;
  int window = 20;
  int min_count = 20;
  int epochs = 20;
  double lr_start = 0.025;
  double lr_end = 0.0001;
  std::uint64_t seed = 0;
};

struct DocModel {
  Doc2VecConfig config;
  Vocabulary vocab;
  HuffmanTree tree;
  std::vector<Vec> word_vectors;
  std::vector<Vec> node_vectors;
  std::vector<Vec> doc_vectors;
  std::vector<std::string> doc_ids;
  std::unordered_map<std::string, int> doc_index;
  // Mean negative log probability per training position, one entry per epoch.
  std::vector<double> epoch_losses;
};

// Probability of emitting token_index given the context vector: product of
// branch sigmoids along the token's path. Sums to one over the vocabulary.
double hs_probability(const HuffmanTree& tree,
                      const std::vector<Vec>& node_vectors,
                      std::span<const double> context, int token_index);
double hs_probability(const DocModel& model, std::span<const double> context,
                      const std::string& token);  // UnknownToken

// Distributed-memory training: the context is the mean of the document vector
// and the surrounding window's word vectors, and SGD ascends the
// hierarchical-softmax log likelihood. Learning rate decays linearly per
// position from lr_start to lr_end over the whole run.
DocModel train_pvdm(const Corpus& corpus, const Doc2VecConfig& config);

// Held-out inference: word and node weights stay frozen; only the fresh
// document vector is optimized, for `steps` passes over the token sequence.
Vec infer_doc_vector(const DocModel& model,
                     const std::vector<std::string>& tokens, int steps,
                     std::uint64_t seed = 1);  // AllTokensUnknown

SemanticSpace space_from_model(const DocModel& model);

}  // namespace semloc
