#include <doctest.h>

#include <cmath>
#include <random>

#include "mleval/error.hpp"
#include "mleval/wmd.hpp"
#include "test_util.hpp"
#include "transport_oracle.hpp"

using namespace mleval;
using mleval::testing::error_code_of;

namespace {

LabelBag words(std::initializer_list<const char*> tokens) {
  LabelBag bag;
  for (const auto* t : tokens) bag.push_back(Token::word(t));
  return bag;
}

}  // namespace

TEST_CASE("build_nbow") {
  const auto nbow = build_nbow(words({"a", "a", "b"}));
  REQUIRE(nbow.tokens.size() == 2);
  CHECK(nbow.tokens[0] == Token::word("a"));
  CHECK(nbow.weights[0] == doctest::Approx(2.0 / 3.0));
  CHECK(nbow.weights[1] == doctest::Approx(1.0 / 3.0));

  CHECK(build_nbow(words({"x"})).weights == std::vector<double>{1.0});
  CHECK(error_code_of([] { build_nbow({}); }) == Errc::EmptyBag);

  const auto with_unknown = build_nbow(LabelBag{Token::unknown(), Token::word("a"), Token::unknown()});
  REQUIRE(with_unknown.tokens.size() == 2);
  CHECK(with_unknown.tokens[0].is_unknown());
}

TEST_CASE("cost_matrix") {
  const auto store = mleval::testing::make_store(2, {{"o", {0, 0}}, {"p", {3, 4}}, {"e", {1, 0}}});
  const auto a = build_nbow(words({"o", "e"}));
  const auto b = build_nbow(LabelBag{Token::word("p"), Token::word("e"), Token::unknown()});
  const auto c = cost_matrix(a, b, store);
  CHECK(c(0, 0) == 5.0);
  CHECK(c(1, 1) == 0.0);
  CHECK(c(1, 2) == 1.0);  // unit word vs Unknown
  CHECK(c(0, 2) == 0.0);  // the zero vector vs Unknown

  const auto unk = build_nbow(LabelBag{Token::unknown()});
  CHECK(cost_matrix(unk, unk, store)(0, 0) == 0.0);

  const auto missing = build_nbow(words({"nope"}));
  CHECK(error_code_of([&] { cost_matrix(missing, a, store); }) == Errc::UnresolvedToken);
}

TEST_CASE("wmd_pair") {
  const auto store = mleval::testing::make_store(2, {{"a", {0, 0}}, {"b", {3, 4}}, {"c", {0, 1}}});
  CHECK(wmd_pair(words({"a", "b"}), words({"b", "a"}), store) == 0.0);
  CHECK(wmd_pair(words({"a"}), words({"b"}), store) == 5.0);

  // {a: 2/3, b: 1/3} -> {b: 1/2, c: 1/2}; oracle by enumeration.
  mleval::testing::DenseProblem p;
  p.supply = {2.0 / 3.0, 1.0 / 3.0};
  p.demand = {0.5, 0.5};
  const double ab = 5.0;
  const double ac = 1.0;
  const double bc = std::sqrt(9.0 + 9.0);
  p.costs = {ab, ac, 0.0, bc};
  const double oracle = mleval::testing::brute_force_optimum(p);
  CHECK(std::fabs(wmd_pair(words({"a", "a", "b"}), words({"b", "c"}), store) - oracle) <= 1e-9);
  // Hand value: a sends 1/2 to c (cost 1/2) and 1/6 to b (cost 5/6), b stays.
  CHECK(std::fabs(oracle - (0.5 + 5.0 / 6.0)) <= 1e-12);

  CHECK(error_code_of([&] { wmd_pair({}, words({"a"}), store); }) == Errc::EmptyBag);
}

TEST_CASE("unknown labels raise the distance") {
  const auto store = mleval::testing::make_store(2, {{"x", {1, 0}}, {"y", {0.8f, 0.6f}}});
  const double known = wmd_pair(words({"x"}), words({"y"}), store);
  const double unknown = wmd_pair(words({"x"}), LabelBag{Token::unknown()}, store);
  CHECK(unknown == doctest::Approx(1.0));
  CHECK(unknown > known);
}

TEST_CASE("wmd properties on random bags") {
  std::mt19937_64 rng(31);
  const auto store = mleval::testing::random_store(20, 5, rng);
  std::uniform_int_distribution<int> word(0, 20);  // 20 -> Unknown
  std::uniform_int_distribution<int> size(1, 8);
  auto random_bag = [&] {
    LabelBag bag;
    for (int k = size(rng); k > 0; --k) {
      const int w = word(rng);
      bag.push_back(w == 20 ? Token::unknown() : Token::word("w" + std::to_string(w)));
    }
    return bag;
  };
  for (int trial = 0; trial < 100; ++trial) {
    const auto x = random_bag();
    const auto y = random_bag();
    CHECK(wmd_pair(x, x, store) <= 1e-9);
    const double xy = wmd_pair(x, y, store);
    CHECK(xy >= 0.0);
    CHECK(std::fabs(xy - wmd_pair(y, x, store)) <= 1e-9);
  }
}

TEST_CASE("dataset_wmd") {
  const auto store = mleval::testing::make_store(1, {{"a", {0}}, {"b", {2}}, {"c", {4}}});
  const auto one = dataset_wmd({{"1", words({"a"}), words({"b"})}}, store);
  CHECK(one.mean == 2.0);
  CHECK(one.evaluated == 1);

  const auto two = dataset_wmd({{"1", words({"a"}), words({"b"})}, {"2", words({"a"}), words({"c"})}}, store);
  CHECK(two.mean == 3.0);

  const auto skip = dataset_wmd({{"1", words({"a"}), {}}, {"2", words({"a"}), words({"c"})}}, store);
  CHECK(skip.mean == 4.0);
  CHECK(skip.skipped == 1);

  CHECK(error_code_of([&] { dataset_wmd({{"1", words({"a"}), {}}}, store); }) == Errc::EmptyDataset);
  CHECK(average_wmd({{"1", 2.0}, {"2", 4.0}}) == 3.0);
}
