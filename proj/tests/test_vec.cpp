#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <set>

#include <doctest.h>

#include "helpers.hpp"
#include "semloc/io.hpp"
#include "semloc/rand.hpp"
#include "semloc/vec.hpp"

using namespace semloc;
using testutil::random_vec;

TEST_CASE("vector primitives match hand values") {
  CHECK(dot(Vec{1, 2, 3}, Vec{4, 5, 6}) == 32.0);
  CHECK(norm(Vec{3, 4}) == 5.0);
  CHECK(squared_euclidean(Vec{1, 2}, Vec{4, 6}) == 25.0);
  CHECK(cosine_similarity(Vec{1, 0}, Vec{0, 1}) == doctest::Approx(0.0));
  CHECK(cosine_similarity(Vec{2, 0}, Vec{5, 0}) == doctest::Approx(1.0));

  const Vec unit = l2_normalize(Vec{3, 4});
  CHECK(unit[0] == 0.6);
  CHECK(unit[1] == 0.8);

  Vec y{1, 1};
  axpy(2.0, Vec{2, 3}, y);
  CHECK(y == Vec{5, 7});

  CHECK(all_finite(Vec{1, -2, 0}));
  CHECK_FALSE(all_finite(Vec{1, std::nan("")}));
  CHECK_FALSE(all_finite(Vec{1, INFINITY}));
}

TEST_CASE("vector primitives reject bad input") {
  CHECK_THROWS_AS(dot(Vec{1}, Vec{1, 2}), Error);
  CHECK_THROWS_AS(squared_euclidean(Vec{1}, Vec{1, 2}), Error);
  try {
    l2_normalize(Vec{0, 0, 0});
    FAIL("expected ZeroVector");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ZeroVector);
  }
  CHECK_THROWS_AS(cosine_similarity(Vec{0, 0}, Vec{1, 0}), Error);
}

TEST_CASE("seeded rng streams reproduce and separate") {
  std::mt19937_64 a = make_rng(42, 7);
  std::mt19937_64 b = make_rng(42, 7);
  std::mt19937_64 c = make_rng(42, 8);
  bool any_diff = false;
  for (int i = 0; i < 5; ++i) {
    const std::uint64_t x = a();
    CHECK(x == b());
    any_diff = any_diff || (x != c());
  }
  CHECK(any_diff);
}

TEST_CASE("uniform_index stays in range and covers it") {
  std::mt19937_64 rng = make_rng(1);
  std::set<std::size_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t v = uniform_index(rng, 7);
    CHECK(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
  CHECK(uniform_index(rng, 1) == 0);
  CHECK(uniform_index(rng, 0) == 0);
}

TEST_CASE("uniform01 and gaussian have the right first moments") {
  std::mt19937_64 rng = make_rng(2);
  double mean01 = 0.0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    const double u = uniform01(rng);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    mean01 += u;
  }
  CHECK(std::abs(mean01 / n - 0.5) < 0.01);

  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = gaussian(rng);
    sum += g;
    sum2 += g * g;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(std::sqrt(var) - 1.0) < 0.02);
}

TEST_CASE("shuffle permutes and sample_distinct excludes") {
  std::mt19937_64 rng = make_rng(3);
  std::vector<int> items{0, 1, 2, 3, 4, 5, 6, 7};
  std::vector<int> shuffled = items;
  shuffle_in_place(shuffled, rng);
  std::vector<int> sorted = shuffled;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == items);

  for (int rep = 0; rep < 200; ++rep) {
    const auto picks = sample_distinct(rng, 10, 4, 3);
    CHECK(picks.size() == 4);
    std::set<std::size_t> uniq(picks.begin(), picks.end());
    CHECK(uniq.size() == 4);
    CHECK(uniq.count(3) == 0);
    for (const std::size_t p : picks) CHECK(p < 10);
  }
  // Full draw returns everything except the excluded index.
  const auto all = sample_distinct(rng, 5, 4, 2);
  std::set<std::size_t> uniq(all.begin(), all.end());
  CHECK(uniq == std::set<std::size_t>{0, 1, 3, 4});
}

TEST_CASE("base64 round trips and matches the classic vector") {
  const unsigned char man[] = {'M', 'a', 'n'};
  CHECK(base64_encode(man, 3) == "TWFu");
  CHECK(base64_encode(man, 2) == "TWE=");
  CHECK(base64_encode(man, 1) == "TQ==");
  CHECK(base64_encode(nullptr, 0) == "");

  std::mt19937_64 rng = make_rng(4);
  for (int len = 0; len < 40; ++len) {
    std::vector<unsigned char> bytes(len);
    for (auto& b : bytes) b = static_cast<unsigned char>(rng() & 0xff);
    const std::string text = base64_encode(bytes.data(), bytes.size());
    CHECK(base64_decode(text) == bytes);
  }
}

TEST_CASE("double blobs round trip bit for bit") {
  std::mt19937_64 rng = make_rng(5);
  Vec values = random_vec(rng, 17, 100.0);
  values.push_back(0.0);
  values.push_back(-0.0);
  values.push_back(1e-300);
  values.push_back(-1e300);
  const Vec back = decode_doubles(encode_doubles(values));
  REQUIRE(back.size() == values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint64_t a, b;
    std::memcpy(&a, &values[i], 8);
    std::memcpy(&b, &back[i], 8);
    CHECK(a == b);
  }
  CHECK(decode_doubles("").empty());
}

TEST_CASE("fnv1a64 matches published vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(to_hex(0xaf63dc4c8601ec8cULL) == "af63dc4c8601ec8c");
  CHECK(to_hex(0) == "0000000000000000");
}

TEST_CASE("jsonl io reports the failing line") {
  const auto dir = std::filesystem::temp_directory_path() / "semloc_io_test";
  std::filesystem::create_directories(dir);
  const std::string good = (dir / "good.jsonl").string();
  const std::string bad = (dir / "bad.jsonl").string();

  write_jsonl(good, {Json{{"k", 1}}, Json{{"k", 2}}});
  const auto rows = read_jsonl(good);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1]["k"] == 2);

  write_text_file(bad, "{\"k\": 1}\n\nnot json\n");
  try {
    read_jsonl(bad);
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ParseError);
    CHECK(std::string(e.what()).find("3") != std::string::npos);
  }

  try {
    read_text_file((dir / "missing.jsonl").string());
    FAIL("expected IoError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::IoError);
  }
  std::filesystem::remove_all(dir);
}
