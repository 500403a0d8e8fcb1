#pragma once

#include <span>
#include <string>
#include <vector>

#include "semloc/errors.hpp"

namespace semloc {

// All internal math runs in double precision.
using Vec = std::vector<double>;

enum class Modality { image, text };

const char* to_string(Modality m);
Modality modality_from_string(const std::string& s);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
double squared_euclidean(std::span<const double> a, std::span<const double> b);
double cosine_similarity(std::span<const double> a, std::span<const double> b);

// Unit-norm copy. Inputs with norm below 1e-12 are rejected (ZeroVector).
Vec l2_normalize(std::span<const double> a);

bool all_finite(std::span<const double> a);

// y += s * x
void axpy(double s, std::span<const double> x, Vec& y);

struct FeatureVector {
  Vec values;
  Modality modality = Modality::image;
};

// Output of an encoder: unit length by construction.
struct JointEmbedding {
  Vec values;
  Modality modality = Modality::image;
};

struct Triplet {
  std::string anchor_id;
  std::string positive_id;
  std::string negative_id;
  Modality anchor_modality = Modality::image;
  Modality target_modality = Modality::text;
};

}  // namespace semloc
