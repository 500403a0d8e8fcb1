#include "semloc/losses.hpp"

#include <cmath>

namespace semloc {

const char* to_string(BaseLoss b) {
  return b == BaseLoss::triplet ? "triplet" : "angular";
}

BaseLoss base_loss_from_string(const std::string& s) {
  if (s == "triplet") return BaseLoss::triplet;
  if (s == "angular") return BaseLoss::angular;
  fail(ErrorKind::ConfigInvalid, "unknown base loss: " + s);
}

TripleGrad triplet_loss(std::span<const double> anchor,
                        std::span<const double> positive,
                        std::span<const double> negative,
                        const TripletConfig& cfg) {
  const double d_ap = squared_euclidean(anchor, positive);
  const double d_an = squared_euclidean(anchor, negative);
  const double expr = d_ap - d_an + cfg.margin;

  TripleGrad out;
  const std::size_t dim = anchor.size();
  out.anchor.assign(dim, 0.0);
  out.positive.assign(dim, 0.0);
  out.negative.assign(dim, 0.0);
  if (expr <= 0.0) return out;

  out.value = expr;
  // The anchor-positive and anchor-negative pulls cancel the anchor itself.
  for (std::size_t i = 0; i < dim; ++i) {
    out.anchor[i] = 2.0 * (negative[i] - positive[i]);
    out.positive[i] = 2.0 * (positive[i] - anchor[i]);
    out.negative[i] = 2.0 * (anchor[i] - negative[i]);
  }
  return out;
}

TripleGrad angular_loss(std::span<const double> anchor,
                        std::span<const double> positive,
                        std::span<const double> negative,
                        const AngularConfig& cfg) {
  const double t4 = 4.0 * cfg.tan_sq_alpha;
  const std::size_t dim = anchor.size();
  const double d_ap = squared_euclidean(anchor, positive);

  Vec center(dim);
  if (positive.size() != dim || negative.size() != dim) {
    fail(ErrorKind::DimensionMismatch, "angular loss inputs differ in size");
  }
  for (std::size_t i = 0; i < dim; ++i) {
    center[i] = 0.5 * (anchor[i] + positive[i]);
  }
  const double d_nc = squared_euclidean(negative, center);
  const double expr = d_ap - t4 * d_nc;

  TripleGrad out;
  out.anchor.assign(dim, 0.0);
  out.positive.assign(dim, 0.0);
  out.negative.assign(dim, 0.0);
  if (expr <= 0.0) return out;

  out.value = expr;
  for (std::size_t i = 0; i < dim; ++i) {
    const double ap = anchor[i] - positive[i];
    const double nc = negative[i] - center[i];
    out.anchor[i] = 2.0 * ap + t4 * nc;
    out.positive[i] = -2.0 * ap + t4 * nc;
    out.negative[i] = -2.0 * t4 * nc;
  }
  return out;
}

TripleGrad base_loss(std::span<const double> anchor,
                     std::span<const double> positive,
                     std::span<const double> negative,
                     const BaseLossSpec& spec) {
  return spec.kind == BaseLoss::triplet
             ? triplet_loss(anchor, positive, negative, spec.triplet)
             : angular_loss(anchor, positive, negative, spec.angular);
}

NPairsGrad npairs_loss(std::span<const double> anchor,
                       std::span<const double> positive,
                       const std::vector<const Vec*>& negatives,
                       const BaseLossSpec& spec) {
  if (negatives.empty()) {
    fail(ErrorKind::EmptyNegatives, "npairs loss needs at least one negative");
  }
  const std::size_t dim = anchor.size();
  NPairsGrad out;
  out.anchor.assign(dim, 0.0);
  out.positive.assign(dim, 0.0);
  out.negatives.reserve(negatives.size());
  for (const Vec* neg : negatives) {
    TripleGrad g = base_loss(anchor, positive, *neg, spec);
    out.value += g.value;
    axpy(1.0, g.anchor, out.anchor);
    axpy(1.0, g.positive, out.positive);
    out.negatives.push_back(std::move(g.negative));
  }
  return out;
}

NPairsGrad text_neighbor_loss(std::span<const double> text_anchor,
                              std::span<const double> text_neighbor_positive,
                              const std::vector<const Vec*>& text_negatives,
                              const BaseLossSpec& spec) {
  return npairs_loss(text_anchor, text_neighbor_positive, text_negatives,
                     spec);
}

NPairsGrad image_neighbor_loss(std::span<const double> image_anchor,
                               std::span<const double> image_neighbor_positive,
                               const std::vector<const Vec*>& image_negatives,
                               const BaseLossSpec& spec) {
  return npairs_loss(image_anchor, image_neighbor_positive, image_negatives,
                     spec);
}

void LossBundle::accumulate(const GradKey& key, std::span<const double> grad,
                            double scale) {
  Vec& slot = gradients[key];
  if (slot.empty()) slot.assign(grad.size(), 0.0);
  axpy(scale, grad, slot);
}

void LossBundle::add_scaled(const LossBundle& other, double scale) {
  value += scale * other.value;
  for (const auto& [key, grad] : other.gradients) {
    accumulate(key, grad, scale);
  }
}

void LossBundle::scale(double s) {
  value *= s;
  for (auto& [key, grad] : gradients) {
    for (double& g : grad) g *= s;
  }
}

namespace {

std::vector<const Vec*> other_members(std::span<const EmbeddedPair> batch,
                                      std::size_t skip, bool image_side) {
  std::vector<const Vec*> out;
  out.reserve(batch.size() - 1);
  for (std::size_t j = 0; j < batch.size(); ++j) {
    if (j == skip) continue;
    out.push_back(image_side ? &batch[j].image : &batch[j].text);
  }
  return out;
}

void accumulate_npairs(LossBundle& bundle, const NPairsGrad& g,
                       const GradKey& anchor_key, const GradKey& positive_key,
                       std::span<const EmbeddedPair> batch, std::size_t skip,
                       Modality negative_modality) {
  bundle.value += g.value;
  bundle.accumulate(anchor_key, g.anchor, 1.0);
  bundle.accumulate(positive_key, g.positive, 1.0);
  std::size_t slot = 0;
  for (std::size_t j = 0; j < batch.size(); ++j) {
    if (j == skip) continue;
    bundle.accumulate({batch[j].id, negative_modality}, g.negatives[slot],
                      1.0);
    ++slot;
  }
}

}  // namespace

LossBundle symmetric_npairs_loss(std::span<const EmbeddedPair> batch,
                                 const BaseLossSpec& spec) {
  if (batch.size() < 2) {
    fail(ErrorKind::BatchTooSmall,
         "symmetric n-pairs loss needs a batch of at least two pairs");
  }
  LossBundle bundle;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const EmbeddedPair& pair = batch[i];
    const auto text_negs = other_members(batch, i, false);
    NPairsGrad img_anchor =
        npairs_loss(pair.image, pair.text, text_negs, spec);
    accumulate_npairs(bundle, img_anchor, {pair.id, Modality::image},
                      {pair.id, Modality::text}, batch, i, Modality::text);

    const auto image_negs = other_members(batch, i, true);
    NPairsGrad txt_anchor =
        npairs_loss(pair.text, pair.image, image_negs, spec);
    accumulate_npairs(bundle, txt_anchor, {pair.id, Modality::text},
                      {pair.id, Modality::image}, batch, i, Modality::image);
  }
  bundle.scale(1.0 / static_cast<double>(batch.size()));
  return bundle;
}

LossBundle combined_loss(std::span<const EmbeddedPair> batch,
                         std::span<const NeighborAssignment> assignments,
                         const LossWeights& weights, const TripletConfig& tcfg,
                         const AngularConfig& acfg) {
  BaseLossSpec spec{weights.base, tcfg, acfg};
  LossBundle bundle = symmetric_npairs_loss(batch, spec);
  if (weights.alpha_text == 0.0 && weights.beta_img == 0.0) {
    return bundle;
  }
  if (assignments.size() != batch.size()) {
    fail(ErrorKind::MissingNeighborAssignment,
         "need one neighbor assignment per batch element");
  }
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  if (weights.alpha_text != 0.0) {
    LossBundle text_term;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (assignments[i].text.empty()) {
        fail(ErrorKind::MissingNeighborAssignment,
             "assignment for " + batch[i].id + " lacks a text embedding");
      }
      const auto negs = other_members(batch, i, false);
      NPairsGrad g = text_neighbor_loss(batch[i].text, assignments[i].text,
                                        negs, spec);
      text_term.value += g.value;
      text_term.accumulate({batch[i].id, Modality::text}, g.anchor, 1.0);
      text_term.accumulate({assignments[i].id, Modality::text}, g.positive,
                           1.0);
      std::size_t slot = 0;
      for (std::size_t j = 0; j < batch.size(); ++j) {
        if (j == i) continue;
        text_term.accumulate({batch[j].id, Modality::text},
                             g.negatives[slot++], 1.0);
      }
    }
    text_term.scale(inv_b);
    bundle.add_scaled(text_term, weights.alpha_text);
  }

  if (weights.beta_img != 0.0) {
    LossBundle image_term;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (assignments[i].image.empty()) {
        fail(ErrorKind::MissingNeighborAssignment,
             "assignment for " + batch[i].id + " lacks an image embedding");
      }
      const auto negs = other_members(batch, i, true);
      NPairsGrad g = image_neighbor_loss(batch[i].image, assignments[i].image,
                                         negs, spec);
      image_term.value += g.value;
      image_term.accumulate({batch[i].id, Modality::image}, g.anchor, 1.0);
      image_term.accumulate({assignments[i].id, Modality::image}, g.positive,
                            1.0);
      std::size_t slot = 0;
      for (std::size_t j = 0; j < batch.size(); ++j) {
        if (j == i) continue;
        image_term.accumulate({batch[j].id, Modality::image},
                              g.negatives[slot++], 1.0);
      }
    }
    image_term.scale(inv_b);
    bundle.add_scaled(image_term, weights.beta_img);
  }
  return bundle;
}

}  // namespace semloc
