#include <algorithm>
#include <cmath>

#include <doctest.h>

#include "helpers.hpp"
#include "semloc/gradcheck.hpp"
#include "semloc/losses.hpp"
#include "semloc/rand.hpp"

using namespace semloc;
using namespace testutil;

TEST_CASE("triplet loss matches a hand-computed example") {
  // d(a,p)^2 = 1, d(a,n)^2 = 0.5, margin 0.2 -> 0.7.
  const Vec a{0, 0}, p{1, 0}, n{0.5, 0.5};
  const TripleGrad g = triplet_loss(a, p, n, TripletConfig{0.2});
  CHECK(g.value == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(g.anchor == Vec{-1, 1});
  CHECK(g.positive == Vec{2, 0});
  CHECK(g.negative == Vec{-1, -1});
}

TEST_CASE("triplet hinge boundary and inactive side yield exact zeros") {
  const Vec a{0, 0}, p{1, 0};
  // Gap exactly equals the margin: expr = 1 - 1.2 + 0.2 = 0.
  const TripleGrad boundary =
      triplet_loss(a, p, Vec{1.2, 0}, TripletConfig{0.2});
  // 1 - 1.2 + 0.2 is not exactly 0 in fp64; use a cleaner boundary instead.
  const TripleGrad clean = triplet_loss(a, p, Vec{0, 1}, TripletConfig{0.0});
  CHECK(clean.value == 0.0);
  CHECK(std::all_of(clean.anchor.begin(), clean.anchor.end(),
                    [](double x) { return x == 0.0; }));

  const TripleGrad inactive =
      triplet_loss(a, p, Vec{3, 0}, TripletConfig{0.2});
  CHECK(inactive.value == 0.0);
  for (const Vec* v : {&inactive.anchor, &inactive.positive,
                       &inactive.negative}) {
    for (double x : *v) CHECK(x == 0.0);
  }
  CHECK(boundary.value >= 0.0);
}

TEST_CASE("angular loss matches a hand-computed example") {
  // C = [1,0]; d(a,p)^2 = 4; d(n,C)^2 = 0.25; tan^2 = 1 -> 4 - 4*0.25 = 3.
  const Vec a{0, 0}, p{2, 0}, n{1, 0.5};
  const TripleGrad g = angular_loss(a, p, n, AngularConfig{1.0});
  CHECK(g.value == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(g.anchor == Vec{-4, 2});
  CHECK(g.positive == Vec{4, 2});
  CHECK(g.negative == Vec{0, -4});
}

TEST_CASE("angular loss goes inactive when the negative sits far out") {
  const Vec a{0, 0}, p{1, 0}, n{10, 10};
  const TripleGrad g = angular_loss(a, p, n, AngularConfig{1.0});
  CHECK(g.value == 0.0);
  for (double x : g.anchor) CHECK(x == 0.0);
  for (double x : g.negative) CHECK(x == 0.0);
}

TEST_CASE("active triplet anchor gradient is exactly twice negative minus positive") {
  std::mt19937_64 rng = make_rng(11);
  int checked = 0;
  while (checked < 50) {
    const Vec a = random_vec(rng, 6, 0.8);
    const Vec p = random_vec(rng, 6, 0.8);
    const Vec n = random_vec(rng, 6, 0.8);
    const TripletConfig cfg{0.3};
    const TripleGrad g = triplet_loss(a, p, n, cfg);
    if (g.value <= 0.0) continue;
    ++checked;
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(g.anchor[i] == 2.0 * (n[i] - p[i]));
      CHECK(g.positive[i] == 2.0 * (p[i] - a[i]));
      CHECK(g.negative[i] == 2.0 * (a[i] - n[i]));
    }
  }
}

TEST_CASE("finite differences confirm every loss form") {
  std::mt19937_64 rng = make_rng(12);
  for (int rep = 0; rep < 20; ++rep) {
    CHECK(fd_triplet_case(rng) < kFdTolerance);
    CHECK(fd_angular_case(rng) < kFdTolerance);
    CHECK(fd_npairs_case(rng) < kFdTolerance);
    CHECK(fd_symmetric_case(rng) < kFdTolerance);
    CHECK(fd_neighbor_term_case(rng, true) < kFdTolerance);
    CHECK(fd_neighbor_term_case(rng, false) < kFdTolerance);
    CHECK(fd_combined_case(rng) < kFdTolerance);
  }
}

TEST_CASE("npairs equals the base loss for a single negative") {
  std::mt19937_64 rng = make_rng(13);
  const Vec a = random_vec(rng, 4, 0.7);
  const Vec p = random_vec(rng, 4, 0.7);
  const Vec n = random_vec(rng, 4, 0.7);
  const BaseLossSpec spec{BaseLoss::angular, {}, AngularConfig{0.8}};
  const TripleGrad single = base_loss(a, p, n, spec);
  const NPairsGrad multi = npairs_loss(a, p, {&n}, spec);
  CHECK(multi.value == single.value);
  CHECK(multi.anchor == single.anchor);
  CHECK(multi.positive == single.positive);
  REQUIRE(multi.negatives.size() == 1);
  CHECK(multi.negatives[0] == single.negative);
}

TEST_CASE("npairs is invariant to negative order") {
  std::mt19937_64 rng = make_rng(14);
  const Vec a = random_vec(rng, 4, 0.7);
  const Vec p = random_vec(rng, 4, 0.7);
  std::vector<Vec> ns;
  for (int i = 0; i < 5; ++i) ns.push_back(random_vec(rng, 4, 0.7));
  const BaseLossSpec spec{BaseLoss::triplet, TripletConfig{0.4}, {}};

  std::vector<const Vec*> fwd, rev;
  for (const Vec& n : ns) fwd.push_back(&n);
  rev.assign(fwd.rbegin(), fwd.rend());
  const NPairsGrad x = npairs_loss(a, p, fwd, spec);
  const NPairsGrad y = npairs_loss(a, p, rev, spec);
  CHECK(x.value == doctest::Approx(y.value).epsilon(1e-12));
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(x.anchor[i] == doctest::Approx(y.anchor[i]).epsilon(1e-12));
  }
  // Per-negative gradients travel with their negative.
  for (std::size_t j = 0; j < ns.size(); ++j) {
    CHECK(x.negatives[j] == y.negatives[ns.size() - 1 - j]);
  }
}

TEST_CASE("npairs requires at least one negative") {
  CHECK_THROWS_AS(npairs_loss(Vec{1, 0}, Vec{0, 1}, {}, BaseLossSpec{}),
                  Error);
}

TEST_CASE("symmetric loss rejects tiny batches") {
  std::vector<EmbeddedPair> one{{"p0", Vec{1, 0}, Vec{0, 1}}};
  CHECK_THROWS_AS(symmetric_npairs_loss(one, BaseLossSpec{}), Error);
}

TEST_CASE("symmetric loss matches an independent per-definition sum") {
  std::mt19937_64 rng = make_rng(15);
  for (int rep = 0; rep < 10; ++rep) {
    const BaseLossSpec spec = random_spec(rng);
    const std::vector<EmbeddedPair> batch = random_batch(rng, 5, 4, 0.7);

    double expected = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      for (std::size_t j = 0; j < batch.size(); ++j) {
        if (j == i) continue;
        expected +=
            base_loss(batch[i].image, batch[i].text, batch[j].text, spec)
                .value;
        expected +=
            base_loss(batch[i].text, batch[i].image, batch[j].image, spec)
                .value;
      }
    }
    expected /= static_cast<double>(batch.size());
    const LossBundle bundle = symmetric_npairs_loss(batch, spec);
    CHECK(bundle.value == doctest::Approx(expected).epsilon(1e-12));
    // Every batch member appears in both modalities.
    for (const EmbeddedPair& p : batch) {
      CHECK(bundle.gradients.count({p.id, Modality::image}) == 1);
      CHECK(bundle.gradients.count({p.id, Modality::text}) == 1);
    }
  }
}

TEST_CASE("combined with zero weights reproduces the symmetric loss bitwise") {
  std::mt19937_64 rng = make_rng(16);
  for (int rep = 0; rep < 10; ++rep) {
    const BaseLossSpec spec = random_spec(rng);
    const std::vector<EmbeddedPair> batch = random_batch(rng, 4, 5, 0.7);
    const std::vector<NeighborAssignment> assigns =
        random_assignments(rng, 4, 5, 0.7);

    const LossBundle sym = symmetric_npairs_loss(batch, spec);
    const LossWeights weights{0.0, 0.0, spec.kind};
    const LossBundle comb =
        combined_loss(batch, assigns, weights, spec.triplet, spec.angular);

    CHECK(comb.value == sym.value);
    REQUIRE(comb.gradients.size() == sym.gradients.size());
    auto it = sym.gradients.begin();
    for (const auto& [key, grad] : comb.gradients) {
      CHECK(key == it->first);
      CHECK(grad == it->second);
      ++it;
    }
  }
}

TEST_CASE("combined equals symmetric plus weighted neighborhood terms") {
  std::mt19937_64 rng = make_rng(17);
  for (int rep = 0; rep < 10; ++rep) {
    const BaseLossSpec spec = random_spec(rng);
    const int b = 4;
    const std::vector<EmbeddedPair> batch = random_batch(rng, b, 5, 0.7);
    const std::vector<NeighborAssignment> assigns =
        random_assignments(rng, b, 5, 0.7);
    const LossWeights weights{0.3, 0.1, spec.kind};

    double text_term = 0.0, image_term = 0.0;
    for (int i = 0; i < b; ++i) {
      for (int j = 0; j < b; ++j) {
        if (j == i) continue;
        text_term +=
            base_loss(batch[i].text, assigns[i].text, batch[j].text, spec)
                .value;
        image_term +=
            base_loss(batch[i].image, assigns[i].image, batch[j].image, spec)
                .value;
      }
    }
    const double inv_b = 1.0 / b;
    const double expected =
        symmetric_npairs_loss(batch, spec).value +
        weights.alpha_text * text_term * inv_b +
        weights.beta_img * image_term * inv_b;
    const LossBundle comb =
        combined_loss(batch, assigns, weights, spec.triplet, spec.angular);
    CHECK(comb.value == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("combined loss insists on one assignment per batch element") {
  std::mt19937_64 rng = make_rng(18);
  const std::vector<EmbeddedPair> batch = random_batch(rng, 3, 4, 0.7);
  const std::vector<NeighborAssignment> short_assigns =
      random_assignments(rng, 2, 4, 0.7);
  const LossWeights weights{0.3, 0.1, BaseLoss::angular};
  try {
    combined_loss(batch, short_assigns, weights, {}, {});
    FAIL("expected MissingNeighborAssignment");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MissingNeighborAssignment);
  }
}

TEST_CASE("neighbor assignments may reuse batch ids and gradients merge") {
  std::mt19937_64 rng = make_rng(19);
  const int b = 3;
  const std::vector<EmbeddedPair> batch = random_batch(rng, b, 4, 0.7);
  // Each element's neighbor is another batch member, sharing its embedding.
  std::vector<NeighborAssignment> assigns;
  for (int i = 0; i < b; ++i) {
    const EmbeddedPair& nb = batch[(i + 1) % b];
    assigns.push_back({nb.id, nb.image, nb.text});
  }
  const LossWeights weights{0.5, 0.5, BaseLoss::triplet};
  const LossBundle bundle =
      combined_loss(batch, assigns, weights, TripletConfig{0.2}, {});
  // No q-keys: all gradients land on the batch ids.
  CHECK(bundle.gradients.size() == 2 * b);
}
