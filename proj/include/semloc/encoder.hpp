#pragma once

#include <cstdint>
#include <random>
#include <span>

#include "semloc/vec.hpp"

namespace semloc {

struct EncoderConfig {
  int in_dim = 0;
  int hidden_dim = 0;  // 0 selects a single linear layer
  int out_dim = 256;
};

// Linear (optionally one tanh hidden layer) projection into the joint space,
// followed by L2 normalization. Parameters live in one flat vector so the
// optimizer can treat them uniformly.
struct Encoder {
  Modality modality = Modality::image;
  EncoderConfig config;
  Vec params;

  static Encoder xavier_init(Modality modality, const EncoderConfig& config,
                             std::mt19937_64& rng);

  std::size_t param_count() const;
  JointEmbedding encode(const FeatureVector& input) const;
  Vec encode_values(std::span<const double> input) const;  // DimensionMismatch, ZeroVector

  // Accumulates d(loss)/d(params) into param_grad given the upstream gradient
  // with respect to the normalized output. Recomputes the forward pass.
  void backprop(std::span<const double> input,
                std::span<const double> grad_output, Vec& param_grad) const;
};

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled, applied as lr * wd * w
};

struct AdamState {
  Vec m;
  Vec v;
  long long t = 0;
};

// One bias-corrected Adam step. ShapeMismatch if sizes disagree.
void adam_step(Vec& params, std::span<const double> grads, AdamState& state,
               const AdamConfig& config);

}  // namespace semloc
