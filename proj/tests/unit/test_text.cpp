#include <doctest.h>

#include <algorithm>
#include <string>
#include <vector>

#include "mleval/text.hpp"

using namespace mleval;

TEST_CASE("clean_label lowercases, strips and collapses") {
  CHECK(clean_label("Parking Meter") == "parking meter");
  CHECK(clean_label("  pay-phone ") == "payphone");
  CHECK(clean_label("Trash   Can!") == "trash can");
  CHECK(clean_label("parking_meter") == "parkingmeter");
  CHECK(clean_label("!!!") == "");
  CHECK(clean_label("") == "");
}

TEST_CASE("natural_less orders digit runs numerically") {
  std::vector<std::string> names = {"10.jpg", "2.jpg", "1.jpg", "b.jpg", "a10", "a9", "01.jpg"};
  std::sort(names.begin(), names.end(), [](const auto& a, const auto& b) { return natural_less(a, b); });
  CHECK(names == std::vector<std::string>{"1.jpg", "01.jpg", "2.jpg", "10.jpg", "a9", "a10", "b.jpg"});
  CHECK_FALSE(natural_less("5", "5"));
  CHECK(natural_less("5", "5a"));
}

TEST_CASE("split keeps empty fields") {
  CHECK(split("a,b,,c", ',') == std::vector<std::string>{"a", "b", "", "c"});
  CHECK(split("", ',') == std::vector<std::string>{""});
}

TEST_CASE("sha256_hex matches the published test vector") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
