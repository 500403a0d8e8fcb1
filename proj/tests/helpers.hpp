// Shared test machinery: random loss configurations kept clear of hinge
// kinks, finite-difference batteries for every loss form, and brute-force
// oracles. No doctest dependency so the acceptance binary can reuse it.
#pragma once

#include <algorithm>
#include <climits>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "semloc/doc2vec.hpp"
#include "semloc/gradcheck.hpp"
#include "semloc/losses.hpp"
#include "semloc/rand.hpp"
#include "semloc/space.hpp"

namespace testutil {

using namespace semloc;

inline Vec random_vec(std::mt19937_64& rng, int dim, double scale) {
  Vec v(dim);
  for (double& x : v) x = scale * gaussian(rng);
  return v;
}

// ---------------------------------------------------------------------------
// Hinge-term bookkeeping. Finite differences are only trustworthy when every
// term sits farther from its kink than the step size, so case generators
// resample until this clearance holds.

constexpr double kKinkClearance = 1e-3;
constexpr double kFdStep = 1e-5;
constexpr double kFdTolerance = 1e-5;

inline double hinge_expr(const Vec& anchor, const Vec& positive,
                         const Vec& negative, const BaseLossSpec& spec) {
  const double d_ap = squared_euclidean(anchor, positive);
  if (spec.kind == BaseLoss::triplet) {
    return d_ap - squared_euclidean(anchor, negative) + spec.triplet.margin;
  }
  Vec center(anchor.size());
  for (std::size_t i = 0; i < center.size(); ++i) {
    center[i] = 0.5 * (anchor[i] + positive[i]);
  }
  return d_ap -
         4.0 * spec.angular.tan_sq_alpha * squared_euclidean(negative, center);
}

struct TermScan {
  double min_abs_expr = 1e300;
  int active = 0;

  void feed(double expr) {
    min_abs_expr = std::min(min_abs_expr, std::abs(expr));
    if (expr > 0.0) ++active;
  }
  bool clear() const { return min_abs_expr > kKinkClearance && active > 0; }
};

inline BaseLossSpec random_spec(std::mt19937_64& rng) {
  BaseLossSpec spec;
  spec.kind = (rng() & 1) ? BaseLoss::triplet : BaseLoss::angular;
  spec.triplet.margin = uniform_real(rng, 0.05, 0.5);
  spec.angular.tan_sq_alpha = uniform_real(rng, 0.25, 1.5);
  return spec;
}

// Every (anchor, positive, negative) triple that the combined loss evaluates
// on this batch, reproduced from the definitions rather than the library.
inline void scan_combined_terms(const std::vector<EmbeddedPair>& batch,
                                const std::vector<NeighborAssignment>& assigns,
                                const LossWeights& weights,
                                const BaseLossSpec& spec, TermScan& symmetric,
                                TermScan& text_term, TermScan& image_term) {
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (std::size_t j = 0; j < batch.size(); ++j) {
      if (j == i) continue;
      symmetric.feed(
          hinge_expr(batch[i].image, batch[i].text, batch[j].text, spec));
      symmetric.feed(
          hinge_expr(batch[i].text, batch[i].image, batch[j].image, spec));
      if (weights.alpha_text != 0.0) {
        text_term.feed(
            hinge_expr(batch[i].text, assigns[i].text, batch[j].text, spec));
      }
      if (weights.beta_img != 0.0) {
        image_term.feed(hinge_expr(batch[i].image, assigns[i].image,
                                   batch[j].image, spec));
      }
    }
  }
}

inline std::string pair_id(int i) { return "p" + std::to_string(i); }
inline std::string neighbor_id(int i) { return "q" + std::to_string(i); }

inline std::vector<EmbeddedPair> random_batch(std::mt19937_64& rng, int b,
                                              int dim, double scale) {
  std::vector<EmbeddedPair> batch;
  batch.reserve(b);
  for (int i = 0; i < b; ++i) {
    batch.push_back(
        {pair_id(i), random_vec(rng, dim, scale), random_vec(rng, dim, scale)});
  }
  return batch;
}

inline std::vector<NeighborAssignment> random_assignments(std::mt19937_64& rng,
                                                          int b, int dim,
                                                          double scale) {
  std::vector<NeighborAssignment> out;
  out.reserve(b);
  for (int i = 0; i < b; ++i) {
    out.push_back({neighbor_id(i), random_vec(rng, dim, scale),
                   random_vec(rng, dim, scale)});
  }
  return out;
}

inline PointMap points_of(const std::vector<EmbeddedPair>& batch,
                          const std::vector<NeighborAssignment>& assigns) {
  PointMap pts;
  for (const EmbeddedPair& p : batch) {
    pts[{p.id, Modality::image}] = p.image;
    pts[{p.id, Modality::text}] = p.text;
  }
  for (const NeighborAssignment& a : assigns) {
    pts[{a.id, Modality::image}] = a.image;
    pts[{a.id, Modality::text}] = a.text;
  }
  return pts;
}

inline std::vector<EmbeddedPair> batch_of(const PointMap& pts, int b) {
  std::vector<EmbeddedPair> batch;
  batch.reserve(b);
  for (int i = 0; i < b; ++i) {
    batch.push_back({pair_id(i), pts.at({pair_id(i), Modality::image}),
                     pts.at({pair_id(i), Modality::text})});
  }
  return batch;
}

inline std::vector<NeighborAssignment> assignments_of(const PointMap& pts,
                                                      int b) {
  std::vector<NeighborAssignment> out;
  out.reserve(b);
  for (int i = 0; i < b; ++i) {
    out.push_back({neighbor_id(i), pts.at({neighbor_id(i), Modality::image}),
                   pts.at({neighbor_id(i), Modality::text})});
  }
  return out;
}

[[noreturn]] inline void no_clear_case() {
  throw std::runtime_error("could not sample a kink-free loss configuration");
}

// ---------------------------------------------------------------------------
// One finite-difference comparison per loss form. Each returns the max
// relative error between analytic and central-difference gradients for one
// freshly sampled active, kink-free configuration.

inline double fd_triplet_case(std::mt19937_64& rng) {
  const int dim = 5;
  TripletConfig cfg{uniform_real(rng, 0.05, 0.5)};
  BaseLossSpec spec{BaseLoss::triplet, cfg, {}};
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const Vec a = random_vec(rng, dim, 0.7);
    const Vec p = random_vec(rng, dim, 0.7);
    const Vec n = random_vec(rng, dim, 0.7);
    const double expr = hinge_expr(a, p, n, spec);
    if (expr < kKinkClearance) continue;

    const TripleGrad g = triplet_loss(a, p, n, cfg);
    PointMap analytic{{{"a", Modality::image}, g.anchor},
                      {{"p", Modality::image}, g.positive},
                      {{"n", Modality::image}, g.negative}};
    PointMap pts{{{"a", Modality::image}, a},
                 {{"p", Modality::image}, p},
                 {{"n", Modality::image}, n}};
    const PointMap numeric = finite_difference_gradient(
        [&](const PointMap& q) {
          return triplet_loss(q.at({"a", Modality::image}),
                              q.at({"p", Modality::image}),
                              q.at({"n", Modality::image}), cfg)
              .value;
        },
        pts, kFdStep);
    return max_relative_error(analytic, numeric);
  }
  no_clear_case();
}

inline double fd_angular_case(std::mt19937_64& rng) {
  const int dim = 5;
  AngularConfig cfg{uniform_real(rng, 0.25, 1.5)};
  BaseLossSpec spec{BaseLoss::angular, {}, cfg};
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const Vec a = random_vec(rng, dim, 0.7);
    const Vec p = random_vec(rng, dim, 0.7);
    const Vec n = random_vec(rng, dim, 0.7);
    const double expr = hinge_expr(a, p, n, spec);
    if (expr < kKinkClearance) continue;

    const TripleGrad g = angular_loss(a, p, n, cfg);
    PointMap analytic{{{"a", Modality::image}, g.anchor},
                      {{"p", Modality::image}, g.positive},
                      {{"n", Modality::image}, g.negative}};
    PointMap pts{{{"a", Modality::image}, a},
                 {{"p", Modality::image}, p},
                 {{"n", Modality::image}, n}};
    const PointMap numeric = finite_difference_gradient(
        [&](const PointMap& q) {
          return angular_loss(q.at({"a", Modality::image}),
                              q.at({"p", Modality::image}),
                              q.at({"n", Modality::image}), cfg)
              .value;
        },
        pts, kFdStep);
    return max_relative_error(analytic, numeric);
  }
  no_clear_case();
}

inline double fd_npairs_case(std::mt19937_64& rng) {
  const int dim = 5;
  const int negs = 3;
  const BaseLossSpec spec = random_spec(rng);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const Vec a = random_vec(rng, dim, 0.7);
    const Vec p = random_vec(rng, dim, 0.7);
    std::vector<Vec> ns;
    for (int i = 0; i < negs; ++i) ns.push_back(random_vec(rng, dim, 0.7));

    TermScan scan;
    for (const Vec& n : ns) scan.feed(hinge_expr(a, p, n, spec));
    if (!scan.clear()) continue;

    std::vector<const Vec*> nptrs;
    for (const Vec& n : ns) nptrs.push_back(&n);
    const NPairsGrad g = npairs_loss(a, p, nptrs, spec);

    PointMap analytic{{{"a", Modality::image}, g.anchor},
                      {{"p", Modality::image}, g.positive}};
    PointMap pts{{{"a", Modality::image}, a}, {{"p", Modality::image}, p}};
    for (int i = 0; i < negs; ++i) {
      const GradKey key{"n" + std::to_string(i), Modality::image};
      analytic[key] = g.negatives[i];
      pts[key] = ns[i];
    }
    const PointMap numeric = finite_difference_gradient(
        [&](const PointMap& q) {
          std::vector<Vec> qn;
          for (int i = 0; i < negs; ++i) {
            qn.push_back(q.at({"n" + std::to_string(i), Modality::image}));
          }
          std::vector<const Vec*> qp;
          for (const Vec& n : qn) qp.push_back(&n);
          return npairs_loss(q.at({"a", Modality::image}),
                             q.at({"p", Modality::image}), qp, spec)
              .value;
        },
        pts, kFdStep);
    return max_relative_error(analytic, numeric);
  }
  no_clear_case();
}

inline double fd_symmetric_case(std::mt19937_64& rng) {
  const int dim = 5;
  const int b = 4;
  const BaseLossSpec spec = random_spec(rng);
  const LossWeights off{0.0, 0.0, spec.kind};
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const std::vector<EmbeddedPair> batch = random_batch(rng, b, dim, 0.7);
    TermScan symmetric, unused_t, unused_i;
    scan_combined_terms(batch, {}, off, spec, symmetric, unused_t, unused_i);
    if (!symmetric.clear()) continue;

    const LossBundle bundle = symmetric_npairs_loss(batch, spec);
    const PointMap pts = points_of(batch, {});
    const PointMap numeric = finite_difference_gradient(
        [&](const PointMap& q) {
          return symmetric_npairs_loss(batch_of(q, b), spec).value;
        },
        pts, kFdStep);
    return max_relative_error(bundle.gradients, numeric);
  }
  no_clear_case();
}

// The within-modality neighborhood terms, assembled here from their
// definition: per-anchor n-pairs against same-modality batch members, batch
// mean. `text_side` picks which modality plays.
inline double fd_neighbor_term_case(std::mt19937_64& rng, bool text_side) {
  const int dim = 5;
  const int b = 3;
  const BaseLossSpec spec = random_spec(rng);
  const Modality mod = text_side ? Modality::text : Modality::image;
  const auto member = [&](const EmbeddedPair& p) -> const Vec& {
    return text_side ? p.text : p.image;
  };
  const auto nb_member = [&](const NeighborAssignment& a) -> const Vec& {
    return text_side ? a.text : a.image;
  };

  for (int attempt = 0; attempt < 1000; ++attempt) {
    const std::vector<EmbeddedPair> batch = random_batch(rng, b, dim, 0.7);
    const std::vector<NeighborAssignment> assigns =
        random_assignments(rng, b, dim, 0.7);
    TermScan scan;
    for (int i = 0; i < b; ++i) {
      for (int j = 0; j < b; ++j) {
        if (j == i) continue;
        scan.feed(hinge_expr(member(batch[i]), nb_member(assigns[i]),
                             member(batch[j]), spec));
      }
    }
    if (!scan.clear()) continue;

    const auto term_value = [&](const std::vector<EmbeddedPair>& bt,
                                const std::vector<NeighborAssignment>& as) {
      double total = 0.0;
      for (int i = 0; i < b; ++i) {
        std::vector<const Vec*> negs;
        for (int j = 0; j < b; ++j) {
          if (j != i) negs.push_back(&member(bt[j]));
        }
        total += text_side ? text_neighbor_loss(bt[i].text, as[i].text, negs,
                                                spec)
                                 .value
                           : image_neighbor_loss(bt[i].image, as[i].image,
                                                 negs, spec)
                                 .value;
      }
      return total / static_cast<double>(b);
    };

    LossBundle analytic;
    for (int i = 0; i < b; ++i) {
      std::vector<const Vec*> negs;
      std::vector<int> neg_index;
      for (int j = 0; j < b; ++j) {
        if (j == i) continue;
        negs.push_back(&member(batch[j]));
        neg_index.push_back(j);
      }
      const NPairsGrad g =
          text_side
              ? text_neighbor_loss(batch[i].text, assigns[i].text, negs, spec)
              : image_neighbor_loss(batch[i].image, assigns[i].image, negs,
                                    spec);
      analytic.accumulate({batch[i].id, mod}, g.anchor, 1.0);
      analytic.accumulate({assigns[i].id, mod}, g.positive, 1.0);
      for (std::size_t s = 0; s < neg_index.size(); ++s) {
        analytic.accumulate({batch[neg_index[s]].id, mod}, g.negatives[s],
                            1.0);
      }
    }
    analytic.scale(1.0 / static_cast<double>(b));

    PointMap pts;
    for (const EmbeddedPair& p : batch) pts[{p.id, mod}] = member(p);
    for (const NeighborAssignment& a : assigns) pts[{a.id, mod}] = nb_member(a);

    const PointMap numeric = finite_difference_gradient(
        [&](const PointMap& q) {
          std::vector<EmbeddedPair> bt = batch;
          std::vector<NeighborAssignment> as = assigns;
          for (EmbeddedPair& p : bt) {
            (text_side ? p.text : p.image) = q.at({p.id, mod});
          }
          for (NeighborAssignment& a : as) {
            (text_side ? a.text : a.image) = q.at({a.id, mod});
          }
          return term_value(bt, as);
        },
        pts, kFdStep);
    return max_relative_error(analytic.gradients, numeric);
  }
  no_clear_case();
}

inline double fd_combined_case(std::mt19937_64& rng) {
  const int dim = 5;
  const int b = 4;
  const BaseLossSpec spec = random_spec(rng);
  LossWeights weights{uniform_real(rng, 0.1, 0.6), uniform_real(rng, 0.1, 0.6),
                      spec.kind};
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const std::vector<EmbeddedPair> batch = random_batch(rng, b, dim, 0.7);
    const std::vector<NeighborAssignment> assigns =
        random_assignments(rng, b, dim, 0.7);
    TermScan symmetric, text_term, image_term;
    scan_combined_terms(batch, assigns, weights, spec, symmetric, text_term,
                        image_term);
    if (!symmetric.clear() || !text_term.clear() || !image_term.clear()) {
      continue;
    }

    const LossBundle bundle =
        combined_loss(batch, assigns, weights, spec.triplet, spec.angular);
    const PointMap pts = points_of(batch, assigns);
    const PointMap numeric = finite_difference_gradient(
        [&](const PointMap& q) {
          return combined_loss(batch_of(q, b), assignments_of(q, b), weights,
                               spec.triplet, spec.angular)
              .value;
        },
        pts, kFdStep);
    return max_relative_error(bundle.gradients, numeric);
  }
  no_clear_case();
}

// ---------------------------------------------------------------------------
// Independent oracles.

// Minimum weighted path length over all binary trees on these leaf weights,
// by exhaustive partition. Usable up to ~10 leaves.
inline long long optimal_weighted_path_length(
    const std::vector<long long>& weights) {
  const int n = static_cast<int>(weights.size());
  if (n == 1) return 0;
  long long total = 0;
  for (long long w : weights) total += w;
  long long best = LLONG_MAX;
  for (int mask = 1; mask < (1 << n) - 1; ++mask) {
    if (!(mask & 1)) continue;  // leaf 0 stays left: halves the symmetry
    std::vector<long long> left, right;
    for (int i = 0; i < n; ++i) {
      (((mask >> i) & 1) ? left : right).push_back(weights[i]);
    }
    best = std::min(best, optimal_weighted_path_length(left) +
                              optimal_weighted_path_length(right));
  }
  return best + total;
}

inline Vocabulary make_vocab(
    const std::vector<std::pair<std::string, long long>>& items) {
  Vocabulary vocab;
  for (const auto& [token, freq] : items) {
    vocab.index.emplace(token, vocab.size());
    vocab.tokens.push_back(token);
    vocab.frequencies.push_back(freq);
  }
  return vocab;
}

// All-pairs scan, ties by ascending id: the reference answer for both index
// modes.
inline std::vector<std::string> brute_force_knn(const SemanticSpace& space,
                                                std::size_t qi, int k,
                                                bool cosine = false) {
  std::vector<std::pair<double, std::size_t>> cands;
  for (std::size_t j = 0; j < space.size(); ++j) {
    if (j == qi) continue;
    const double d =
        cosine ? 1.0 - cosine_similarity(space.vectors[qi], space.vectors[j])
               : squared_euclidean(space.vectors[qi], space.vectors[j]);
    cands.emplace_back(d, j);
  }
  std::sort(cands.begin(), cands.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return space.ids[a.second] < space.ids[b.second];
  });
  std::vector<std::string> out;
  const std::size_t keep = std::min<std::size_t>(k, cands.size());
  for (std::size_t i = 0; i < keep; ++i) out.push_back(space.ids[cands[i].second]);
  return out;
}

inline SemanticSpace random_space(std::mt19937_64& rng, int n, int dim,
                                  double scale = 1.0) {
  SemanticSpace space;
  for (int i = 0; i < n; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "x%05d", i);
    space.add(buf, random_vec(rng, dim, scale));
  }
  return space;
}

}  // namespace testutil
