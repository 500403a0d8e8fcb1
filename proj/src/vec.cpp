#include "semloc/vec.hpp"

#include <cmath>

#include "semloc/rand.hpp"

namespace semloc {

namespace {

void require_same_dim(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    fail(ErrorKind::DimensionMismatch,
         "vector dimensions differ: " + std::to_string(a.size()) + " vs " +
             std::to_string(b.size()));
  }
}

}  // namespace

const char* to_string(Modality m) {
  return m == Modality::image ? "image" : "text";
}

Modality modality_from_string(const std::string& s) {
  if (s == "image") return Modality::image;
  if (s == "text") return Modality::text;
  fail(ErrorKind::ParseError, "unknown modality: " + s);
}

double dot(std::span<const double> a, std::span<const double> b) {
  require_same_dim(a, b);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double squared_euclidean(std::span<const double> a,
                         std::span<const double> b) {
  require_same_dim(a, b);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

double cosine_similarity(std::span<const double> a,
                         std::span<const double> b) {
  require_same_dim(a, b);
  const double na = norm(a);
  const double nb = norm(b);
  if (na < 1e-12 || nb < 1e-12) {
    fail(ErrorKind::ZeroVector, "cosine similarity of a zero vector");
  }
  return dot(a, b) / (na * nb);
}

Vec l2_normalize(std::span<const double> a) {
  const double n = norm(a);
  if (n < 1e-12) {
    fail(ErrorKind::ZeroVector, "cannot normalize a zero vector");
  }
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] / n;
  return out;
}

bool all_finite(std::span<const double> a) {
  for (double v : a) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void axpy(double s, std::span<const double> x, Vec& y) {
  require_same_dim(x, std::span<const double>(y));
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += s * x[i];
}

std::vector<std::size_t> sample_distinct(std::mt19937_64& rng, std::size_t n,
                                         std::size_t k, std::size_t exclude) {
  std::vector<std::size_t> pool;
  pool.reserve(n > 0 ? n - 1 : 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (i != exclude) pool.push_back(i);
  }
  if (k > pool.size()) k = pool.size();
  std::vector<std::size_t> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + uniform_index(rng, pool.size() - i);
    std::swap(pool[i], pool[j]);
    out.push_back(pool[i]);
  }
  return out;
}

}  // namespace semloc
