#include "semloc/doc2vec.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "semloc/rand.hpp"

namespace semloc {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void validate(const Doc2VecConfig& cfg) {
  if (cfg.dim < 1) fail(ErrorKind::ConfigInvalid, "dim must be positive");
  if (cfg.window < 0) fail(ErrorKind::ConfigInvalid, "window must be >= 0");
  if (cfg.min_count < 1) {
    fail(ErrorKind::ConfigInvalid, "min_count must be >= 1");
  }
  if (cfg.epochs < 0) fail(ErrorKind::ConfigInvalid, "epochs must be >= 0");
  if (cfg.lr_start <= 0.0 || cfg.lr_end <= 0.0 ||
      cfg.lr_end > cfg.lr_start) {
    fail(ErrorKind::ConfigInvalid,
         "learning rates must satisfy 0 < lr_end <= lr_start");
  }
}

Vec init_vector(int dim, std::mt19937_64& rng) {
  Vec v(dim);
  const double bound = 0.5 / static_cast<double>(dim);
  for (double& x : v) x = uniform_real(rng, -bound, bound);
  return v;
}

}  // namespace

int Vocabulary::lookup(const std::string& token) const {
  const auto it = index.find(token);
  return it == index.end() ? -1 : it->second;
}

Vocabulary build_vocabulary(const Corpus& corpus, int min_count) {
  if (corpus.empty()) {
    fail(ErrorKind::EmptyCorpus, "corpus has no documents");
  }
  std::unordered_map<std::string, long long> counts;
  for (const TokenDoc& doc : corpus) {
    for (const std::string& token : doc.tokens) ++counts[token];
  }
  std::vector<std::pair<std::string, long long>> kept;
  for (const auto& [token, freq] : counts) {
    if (freq >= min_count) kept.emplace_back(token, freq);
  }
  if (kept.empty()) {
    fail(ErrorKind::EmptyVocabulary,
         "no token reaches min_count = " + std::to_string(min_count));
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary vocab;
  vocab.min_count = min_count;
  vocab.tokens.reserve(kept.size());
  vocab.frequencies.reserve(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    vocab.tokens.push_back(kept[i].first);
    vocab.frequencies.push_back(kept[i].second);
    vocab.index.emplace(kept[i].first, (int)i);
  }
  return vocab;
}

double HuffmanTree::weighted_path_length(const Vocabulary& vocab) const {
  double total = 0.0;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    total += static_cast<double>(vocab.frequencies[i]) *
             static_cast<double>(paths[i].size());
  }
  return total;
}

HuffmanTree build_huffman(const Vocabulary& vocab) {
  const int v = vocab.size();
  if (v < 2) {
    fail(ErrorKind::VocabularyTooSmall,
         "a prefix code needs at least two tokens");
  }
  // Node ids: leaves 0..v-1 in vocabulary order, internal nodes v..2v-2 in
  // creation order. The heap breaks weight ties by the smaller node id, so
  // the tree is a deterministic function of the frequency list.
  struct Entry {
    long long weight;
    int node;
    bool operator>(const Entry& other) const {
      if (weight != other.weight) return weight > other.weight;
      return node > other.node;
    }
  };
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap;
  for (int i = 0; i < v; ++i) heap.push({vocab.frequencies[i], i});

  std::vector<int> parent(2 * v - 1, -1);
  std::vector<int> branch(2 * v - 1, 0);
  int next_id = v;
  while (heap.size() > 1) {
    const Entry a = heap.top();
    heap.pop();
    const Entry b = heap.top();
    heap.pop();
    parent[a.node] = next_id;
    branch[a.node] = +1;
    parent[b.node] = next_id;
    branch[b.node] = -1;
    heap.push({a.weight + b.weight, next_id});
    ++next_id;
  }

  HuffmanTree tree;
  tree.internal_nodes = v - 1;
  tree.paths.resize(v);
  for (int leaf = 0; leaf < v; ++leaf) {
    std::vector<HuffmanTree::Step> path;
    int node = leaf;
    while (parent[node] != -1) {
      path.push_back({parent[node] - v, branch[node]});
      node = parent[node];
    }
    std::reverse(path.begin(), path.end());
    tree.paths[leaf] = std::move(path);
  }
  return tree;
}

double hs_probability(const HuffmanTree& tree,
                      const std::vector<Vec>& node_vectors,
                      std::span<const double> context, int token_index) {
  double p = 1.0;
  for (const HuffmanTree::Step& step : tree.paths[token_index]) {
    p *= sigmoid(step.sign * dot(node_vectors[step.node], context));
  }
  return p;
}

double hs_probability(const DocModel& model, std::span<const double> context,
                      const std::string& token) {
  const int idx = model.vocab.lookup(token);
  if (idx < 0) fail(ErrorKind::UnknownToken, "token not in vocabulary: " + token);
  return hs_probability(model.tree, model.node_vectors, context, idx);
}

namespace {

// One SGD position: predict toks[t] from the mean of doc_vec and the window
// word vectors. Updates node vectors only when learn_nodes is set; the
// doc/word gradient uses the node vectors as they were before their update.
// Returns the negative log probability of the target token.
double pvdm_position(const HuffmanTree& tree, std::vector<Vec>& node_vectors,
                     std::vector<Vec>& word_vectors, Vec& doc_vector,
                     const std::vector<int>& toks, std::size_t t, int window,
                     double lr, bool learn_nodes, bool learn_words, Vec& ctx,
                     Vec& grad_ctx) {
  const int dim = (int)doc_vector.size();
  const std::size_t lo = t >= (std::size_t)window ? t - window : 0;
  const std::size_t hi = std::min(toks.size() - 1, t + (std::size_t)window);

  ctx.assign(dim, 0.0);
  axpy(1.0, doc_vector, ctx);
  int cnt = 1;
  for (std::size_t u = lo; u <= hi; ++u) {
    if (u == t) continue;
    axpy(1.0, word_vectors[toks[u]], ctx);
    ++cnt;
  }
  const double inv = 1.0 / static_cast<double>(cnt);
  for (double& x : ctx) x *= inv;

  grad_ctx.assign(dim, 0.0);
  double logp = 0.0;
  for (const HuffmanTree::Step& step : tree.paths[toks[t]]) {
    Vec& node = node_vectors[step.node];
    const double z = dot(node, ctx);
    const double p = sigmoid(step.sign * z);
    logp += std::log(std::max(p, 1e-300));
    const double g = step.sign * (1.0 - p);
    axpy(g, node, grad_ctx);
    if (learn_nodes) axpy(lr * g, ctx, node);
  }

  const double scale = lr * inv;
  axpy(scale, grad_ctx, doc_vector);
  if (learn_words) {
    for (std::size_t u = lo; u <= hi; ++u) {
      if (u == t) continue;
      axpy(scale, grad_ctx, word_vectors[toks[u]]);
    }
  }
  return -logp;
}

}  // namespace

DocModel train_pvdm(const Corpus& corpus, const Doc2VecConfig& config) {
  validate(config);
  DocModel model;
  model.config = config;
  model.vocab = build_vocabulary(corpus, config.min_count);
  model.tree = build_huffman(model.vocab);

  std::vector<std::vector<int>> filtered(corpus.size());
  std::size_t positions_per_epoch = 0;
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    for (const std::string& token : corpus[d].tokens) {
      const int idx = model.vocab.lookup(token);
      if (idx >= 0) filtered[d].push_back(idx);
    }
    positions_per_epoch += filtered[d].size();
  }

  std::mt19937_64 rng = make_rng(config.seed, 11);
  model.doc_vectors.reserve(corpus.size());
  model.doc_ids.reserve(corpus.size());
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    if (model.doc_index.count(corpus[d].id)) {
      fail(ErrorKind::DuplicateId, "duplicate document id: " + corpus[d].id);
    }
    model.doc_index.emplace(corpus[d].id, (int)d);
    model.doc_ids.push_back(corpus[d].id);
    model.doc_vectors.push_back(init_vector(config.dim, rng));
  }
  model.word_vectors.reserve(model.vocab.size());
  for (int i = 0; i < model.vocab.size(); ++i) {
    model.word_vectors.push_back(init_vector(config.dim, rng));
  }
  model.node_vectors.assign(model.tree.internal_nodes, Vec(config.dim, 0.0));

  const double total =
      static_cast<double>(config.epochs) *
      static_cast<double>(std::max<std::size_t>(positions_per_epoch, 1));
  std::size_t done = 0;
  Vec ctx, grad_ctx;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double loss_sum = 0.0;
    std::size_t count = 0;
    for (std::size_t d = 0; d < corpus.size(); ++d) {
      const std::vector<int>& toks = filtered[d];
      for (std::size_t t = 0; t < toks.size(); ++t) {
        double lr = config.lr_start -
                    (config.lr_start - config.lr_end) *
                        (static_cast<double>(done) / total);
        if (lr < config.lr_end) lr = config.lr_end;
        ++done;
        loss_sum += pvdm_position(model.tree, model.node_vectors,
                                  model.word_vectors, model.doc_vectors[d],
                                  toks, t, config.window, lr, true, true, ctx,
                                  grad_ctx);
        ++count;
      }
    }
    model.epoch_losses.push_back(count ? loss_sum / (double)count : 0.0);
  }
  return model;
}

Vec infer_doc_vector(const DocModel& model,
                     const std::vector<std::string>& tokens, int steps,
                     std::uint64_t seed) {
  if (steps < 0) fail(ErrorKind::ConfigInvalid, "steps must be >= 0");
  std::vector<int> toks;
  for (const std::string& token : tokens) {
    const int idx = model.vocab.lookup(token);
    if (idx >= 0) toks.push_back(idx);
  }
  if (toks.empty()) {
    fail(ErrorKind::AllTokensUnknown,
         "no token of the document is in the vocabulary");
  }

  std::mt19937_64 rng = make_rng(seed, 13);
  Vec doc = init_vector(model.config.dim, rng);

  // Frozen model weights: word and node vectors are copied so the const model
  // stays untouched, and only the fresh document vector receives updates.
  std::vector<Vec> nodes = model.node_vectors;
  std::vector<Vec> words = model.word_vectors;

  const double total = static_cast<double>(steps) *
                       static_cast<double>(std::max<std::size_t>(toks.size(), 1));
  std::size_t done = 0;
  Vec ctx, grad_ctx;
  for (int step = 0; step < steps; ++step) {
    for (std::size_t t = 0; t < toks.size(); ++t) {
      double lr = model.config.lr_start -
                  (model.config.lr_start - model.config.lr_end) *
                      (static_cast<double>(done) / total);
      if (lr < model.config.lr_end) lr = model.config.lr_end;
      ++done;
      pvdm_position(model.tree, nodes, words, doc, toks, t,
                    model.config.window, lr, false, false, ctx, grad_ctx);
    }
  }
  return doc;
}

SemanticSpace space_from_model(const DocModel& model) {
  SemanticSpace space;
  space.source = SpaceSource::pvdm;
  for (std::size_t d = 0; d < model.doc_ids.size(); ++d) {
    space.add(model.doc_ids[d], model.doc_vectors[d]);
  }
  return space;
}

}  // namespace semloc
