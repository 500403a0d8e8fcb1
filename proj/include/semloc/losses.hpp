#pragma once

#include <compare>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "semloc/vec.hpp"

namespace semloc {

struct TripletConfig {
  double margin = 0.2;
};

struct AngularConfig {
  // 4 * tan^2(alpha) is the scale applied to the negative-to-center distance;
  // this stores tan^2(alpha) itself.
  double tan_sq_alpha = 1.0;
};

enum class BaseLoss { triplet, angular };

const char* to_string(BaseLoss b);
BaseLoss base_loss_from_string(const std::string& s);

struct BaseLossSpec {
  BaseLoss kind = BaseLoss::angular;
  TripletConfig triplet{};
  AngularConfig angular{};
};

struct LossWeights {
  double alpha_text = 0.0;
  double beta_img = 0.0;
  BaseLoss base = BaseLoss::angular;
};

// Value and gradients for one (anchor, positive, negative) evaluation.
// Inactive hinges yield exactly zero gradients.
struct TripleGrad {
  double value = 0.0;
  Vec anchor;
  Vec positive;
  Vec negative;
};

// Hinge on squared-distance gap with additive margin. Boundary (gap exactly
// at the margin) counts as inactive.
TripleGrad triplet_loss(std::span<const double> anchor,
                        std::span<const double> positive,
                        std::span<const double> negative,
                        const TripletConfig& cfg);

// Hinge comparing the anchor-positive gap against the negative's squared
// distance to the pair center, scaled by 4 tan^2(alpha).
TripleGrad angular_loss(std::span<const double> anchor,
                        std::span<const double> positive,
                        std::span<const double> negative,
                        const AngularConfig& cfg);

TripleGrad base_loss(std::span<const double> anchor,
                     std::span<const double> positive,
                     std::span<const double> negative,
                     const BaseLossSpec& spec);

// Sum of the base loss over every negative for a single anchor.
struct NPairsGrad {
  double value = 0.0;
  Vec anchor;
  Vec positive;
  std::vector<Vec> negatives;  // aligned with the input order
};

NPairsGrad npairs_loss(std::span<const double> anchor,
                       std::span<const double> positive,
                       const std::vector<const Vec*>& negatives,
                       const BaseLossSpec& spec);

// Within-modality neighborhood terms: anchor and its sampled semantic
// neighbor act as the positive pair, every other batch member of the same
// modality is a negative.
NPairsGrad text_neighbor_loss(std::span<const double> text_anchor,
                              std::span<const double> text_neighbor_positive,
                              const std::vector<const Vec*>& text_negatives,
                              const BaseLossSpec& spec);

NPairsGrad image_neighbor_loss(std::span<const double> image_anchor,
                               std::span<const double> image_neighbor_positive,
                               const std::vector<const Vec*>& image_negatives,
                               const BaseLossSpec& spec);

struct GradKey {
  std::string id;
  Modality modality = Modality::image;
  auto operator<=>(const GradKey&) const = default;
};

// Batch-level loss value plus gradients keyed by participating embedding.
// Accumulation follows map order, so results are deterministic.
struct LossBundle {
  double value = 0.0;
  std::map<GradKey, Vec> gradients;

  void accumulate(const GradKey& key, std::span<const double> grad,
                  double scale);
  void add_scaled(const LossBundle& other, double scale);
  void scale(double s);
};

struct EmbeddedPair {
  std::string id;
  Vec image;
  Vec text;
};

// The sampled semantic neighbor of a batch element, already embedded.
struct NeighborAssignment {
  std::string id;
  Vec image;
  Vec text;
};

// Image-anchored and text-anchored in-batch terms, summed over anchors and
// divided by the batch size.
LossBundle symmetric_npairs_loss(std::span<const EmbeddedPair> batch,
                                 const BaseLossSpec& spec);

// symmetric term + alpha * text-neighborhood term + beta * image-neighborhood
// term. Components with weight exactly zero are skipped, so (0, 0) reproduces
// symmetric_npairs_loss bit for bit.
LossBundle combined_loss(std::span<const EmbeddedPair> batch,
                         std::span<const NeighborAssignment> assignments,
                         const LossWeights& weights, const TripletConfig& tcfg,
                         const AngularConfig& acfg);

}  // namespace semloc
