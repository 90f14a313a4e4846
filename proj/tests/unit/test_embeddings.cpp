#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "mleval/embeddings.hpp"
#include "mleval/error.hpp"
#include "test_util.hpp"

using namespace mleval;
using mleval::testing::error_code_of;
using mleval::testing::TempDir;
using mleval::testing::write_file;

TEST_CASE("load_text_model reads header and rows") {
  TempDir dir;
  write_file(dir / "m.txt", "2 3\ncat 1 0 0\ndog 0 1 0\n");
  const auto store = load_text_model(dir / "m.txt");
  CHECK(store.vocab_size() == 2);
  CHECK(store.dim() == 3);
  REQUIRE(store.find("dog"));
  CHECK((*store.find("dog"))[1] == 1.0f);
  CHECK_FALSE(store.find("bird"));
}

TEST_CASE("load_text_model tolerates trailing spaces and CRLF") {
  TempDir dir;
  write_file(dir / "m.txt", "1 2\r\ncat 0.5 -1.25 \r\n");
  const auto store = load_text_model(dir / "m.txt");
  CHECK((*store.find("cat"))[1] == -1.25f);
}

TEST_CASE("load_text_model rejects malformed input") {
  TempDir dir;
  write_file(dir / "dim.txt", "1 2\ncat 1 0 0\n");
  write_file(dir / "empty.txt", "");
  write_file(dir / "dup.txt", "2 1\ncat 1\ncat 2\n");
  write_file(dir / "short.txt", "3 1\ncat 1\n");
  write_file(dir / "header.txt", "two three\n");

  CHECK(error_code_of([&] { load_text_model(dir / "dim.txt"); }) == Errc::DimensionMismatch);
  try {
    load_text_model(dir / "dim.txt");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK(error_code_of([&] { load_text_model(dir / "empty.txt"); }) == Errc::MalformedHeader);
  CHECK(error_code_of([&] { load_text_model(dir / "dup.txt"); }) == Errc::DuplicateToken);
  CHECK(error_code_of([&] { load_text_model(dir / "short.txt"); }) == Errc::MalformedHeader);
  CHECK(error_code_of([&] { load_text_model(dir / "header.txt"); }) == Errc::MalformedHeader);
  CHECK(error_code_of([&] { load_text_model(dir / "missing.txt"); }) == Errc::IoError);
}

TEST_CASE("binary model matches the text model") {
  TempDir dir;
  write_file(dir / "m.txt", "2 3\ncat 1 0 0\ndog 0 1 0\n");
  const auto text = load_text_model(dir / "m.txt");
  save_binary_model(text, dir / "m.bin");
  const auto binary = load_binary_model(dir / "m.bin");
  REQUIRE(binary.vocab_size() == 2);
  REQUIRE(binary.dim() == 3);
  for (const auto& token : text.tokens()) {
    const auto a = *text.find(token);
    const auto b = *binary.find(token);
    for (std::size_t k = 0; k < 3; ++k) CHECK(std::fabs(a[k] - b[k]) <= 1e-6);
  }
  CHECK(load_model(dir / "m.bin").vocab_size() == 2);
}

TEST_CASE("binary model without trailing newlines") {
  TempDir dir;
  std::string bytes = "2 1\n";
  const float one = 1.0f;
  const float two = 2.0f;
  bytes += "a ";
  bytes.append(reinterpret_cast<const char*>(&one), 4);
  bytes += "b ";
  bytes.append(reinterpret_cast<const char*>(&two), 4);
  write_file(dir / "m.bin", bytes);
  const auto store = load_binary_model(dir / "m.bin");
  CHECK((*store.find("b"))[0] == 2.0f);
}

TEST_CASE("binary model errors and the empty model") {
  TempDir dir;
  std::string bytes = "1 3\ncat ";
  const float x = 1.0f;
  bytes.append(reinterpret_cast<const char*>(&x), 4);
  write_file(dir / "trunc.bin", bytes);
  CHECK(error_code_of([&] { load_binary_model(dir / "trunc.bin"); }) == Errc::TruncatedRecord);

  write_file(dir / "bad.bin", "garbage");
  CHECK(error_code_of([&] { load_binary_model(dir / "bad.bin"); }) == Errc::MalformedHeader);

  write_file(dir / "empty.bin", "0 300\n");
  const auto store = load_binary_model(dir / "empty.bin");
  CHECK(store.vocab_size() == 0);
  CHECK(store.dim() == 300);
  CHECK_FALSE(resolve_label(store, "cat").resolved());
}

TEST_CASE("text/binary round trip on a random store") {
  std::mt19937_64 rng(7);
  const auto store = mleval::testing::random_store(40, 12, rng);
  TempDir dir;
  save_text_model(store, dir / "r.txt");
  save_binary_model(store, dir / "r.bin");
  const auto from_text = load_text_model(dir / "r.txt");
  const auto from_binary = load_binary_model(dir / "r.bin");
  CHECK(from_text.tokens() == store.tokens());
  for (const auto& token : store.tokens()) {
    const auto ref = *store.find(token);
    const auto a = *from_text.find(token);
    const auto b = *from_binary.find(token);
    for (std::size_t k = 0; k < store.dim(); ++k) {
      CHECK(std::fabs(ref[k] - a[k]) <= 1e-6);
      CHECK(std::fabs(ref[k] - b[k]) <= 1e-6);
    }
  }
}

TEST_CASE("resolve_label tries the permutations in order") {
  const auto store = mleval::testing::make_store(
      2, {{"Parking_Meter", {1, 0}}, {"tree", {0, 1}}, {"trashcan", {1, 1}}, {"traffic_light", {1, 2}}});

  auto r = resolve_label(store, "parking meter");
  REQUIRE(r.resolved());
  CHECK(*r.token == "Parking_Meter");
  CHECK(*r.permutation_used == Permutation::TitleUnderscore);

  r = resolve_label(store, "Tree");
  CHECK(*r.token == "tree");
  CHECK(*r.permutation_used == Permutation::AsIs);

  r = resolve_label(store, "Trash Can");
  CHECK(*r.token == "trashcan");
  CHECK(*r.permutation_used == Permutation::NoSpace);

  r = resolve_label(store, "traffic light");
  CHECK(*r.token == "traffic_light");
  CHECK(*r.permutation_used == Permutation::Underscore);

  r = resolve_label(store, "zzqx");
  CHECK_FALSE(r.resolved());
  CHECK_FALSE(r.permutation_used);

  CHECK_FALSE(resolve_label(store, "?!").resolved());
}

TEST_CASE("resolve_label prefers the as-is form and is deterministic") {
  const auto store = mleval::testing::make_store(1, {{"parking meter", {1}}, {"Parking_Meter", {2}}});
  for (int rep = 0; rep < 3; ++rep) {
    const auto r = resolve_label(store, "Parking Meter");
    CHECK(*r.token == "parking meter");
    CHECK(*r.permutation_used == Permutation::AsIs);
  }
}

TEST_CASE("cosine") {
  const std::vector<double> x{1, 0};
  const std::vector<double> y{0, 1};
  const std::vector<double> d{1, 1};
  const std::vector<double> v{0.3, -2.0, 5.5};
  CHECK(cosine(std::span<const double>(v), std::span<const double>(v)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cosine(std::span<const double>(x), std::span<const double>(y)) == 0.0);
  // Independent hand computation: (1*1 + 1*0) / (sqrt(2) * 1).
  CHECK(std::fabs(cosine(std::span<const double>(d), std::span<const double>(x)) - 1.0 / std::sqrt(2.0)) <= 1e-9);
  CHECK(std::fabs(cosine(std::span<const double>(d), std::span<const double>(x)) - 0.7071) <= 1e-4);

  const std::vector<double> zero{0, 0};
  CHECK(error_code_of([&] { cosine(std::span<const double>(zero), std::span<const double>(x)); }) == Errc::ZeroVector);
  CHECK(error_code_of([&] { cosine(std::span<const double>(v), std::span<const double>(x)); }) ==
        Errc::DimensionMismatch);
}

TEST_CASE("euclidean") {
  const std::vector<double> o{0, 0};
  const std::vector<double> p{3, 4};
  const std::vector<double> a{1, 1, 1};
  const std::vector<double> b{2, 2, 2};
  CHECK(euclidean(std::span<const double>(p), std::span<const double>(p)) == 0.0);
  CHECK(euclidean(std::span<const double>(o), std::span<const double>(p)) == 5.0);
  CHECK(std::fabs(euclidean(std::span<const double>(a), std::span<const double>(b)) - std::sqrt(3.0)) <= 1e-12);
  CHECK(error_code_of([&] { euclidean(std::span<const double>(a), std::span<const double>(o)); }) ==
        Errc::DimensionMismatch);
}

TEST_CASE("cosine and euclidean are bit-symmetric") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> u(7);
    std::vector<double> v(7);
    for (auto& x : u) x = normal(rng);
    for (auto& x : v) x = normal(rng);
    const std::span<const double> su(u);
    const std::span<const double> sv(v);
    CHECK(cosine(su, sv) == cosine(sv, su));
    CHECK(euclidean(su, sv) == euclidean(sv, su));
    CHECK(cosine(su, sv) >= -1.0);
    CHECK(cosine(su, sv) <= 1.0);
  }
}
