#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "semloc/data.hpp"
#include "semloc/encoder.hpp"
#include "semloc/io.hpp"
#include "semloc/losses.hpp"
#include "semloc/neighbors.hpp"

namespace semloc {

struct TrainConfig {
  int batch_size = 64;
  double learning_rate = 1e-4;
  double weight_decay = 1e-5;
  int plateau_patience = 5;    // epochs without val improvement before decay
  double decay_factor = 0.1;
  int max_epochs = 50;
  int max_lr_decays = 3;       // training stops instead of decaying again
  std::uint64_t seed = 0;
  int embed_dim = 256;
  int hidden_dim = 0;
  LossWeights weights{};
  TripletConfig triplet{};
  AngularConfig angular{};
  NeighborSource neighbor_source = NeighborSource::text_omega;
  std::array<double, 3> split_ratios{0.8, 0.1, 0.1};
};

Json config_to_json(const TrainConfig& config);
TrainConfig config_from_json(const Json& j);  // ConfigInvalid
void validate(const TrainConfig& config);     // ConfigInvalid
std::string config_hash(const TrainConfig& config);

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
};

void save_metrics(const std::vector<EpochMetrics>& metrics,
                  const std::string& path);
std::vector<EpochMetrics> load_metrics(const std::string& path);

struct Checkpoint {
  Encoder image_encoder;
  Encoder text_encoder;
  AdamState adam_image;
  AdamState adam_text;
  int epoch = 0;
  double best_val_loss = 0.0;
  std::string hash;
  TrainConfig config;
};

// Versioned JSON with base64 fp64 parameter blobs; save then load then encode
// reproduces embeddings bit for bit.
void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);  // ParseError

struct BatchItem {
  const PairRecord* record = nullptr;
  const PairRecord* neighbor = nullptr;  // null when neighborhood terms are off
};

// Resolves batch ids and, when requested, samples one semantic neighbor per
// element from the anchor's neighborhood restricted to allowed ids (the
// training split). EmptyNeighborhood if the restriction leaves nothing.
std::vector<BatchItem> assemble_batch(
    const PairDataset& dataset, const NeighborTable& table,
    const std::vector<std::string>& batch_ids,
    const std::vector<std::string>& allowed_neighbor_ids, bool with_neighbors,
    std::mt19937_64& rng);

struct TrainResult {
  Checkpoint checkpoint;  // best validation state
  std::vector<EpochMetrics> metrics;
  SplitSets splits;
};

// Full loop: split, Xavier init, per-epoch shuffled batches, Adam updates,
// plateau-driven LR decay on validation loss, early stop after the decay
// budget is spent. With weights (0, 0) the neighbor table is never touched.
TrainResult train(const PairDataset& dataset, const NeighborTable& table,
                  const TrainConfig& config);

}  // namespace semloc
