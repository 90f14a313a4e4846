#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace mleval {

// Lowercase, drop everything outside [a-z0-9 ], collapse runs of spaces, trim.
std::string clean_label(std::string_view raw);

// Numeric-aware ordering: "2.jpg" < "10.jpg". Digit runs compare by value,
// then by length (so "01" sorts after "1"); other characters bytewise.
bool natural_less(std::string_view a, std::string_view b);

std::vector<std::string> split(std::string_view text, char sep);

// Lowercase hex SHA-256 of the given bytes.
std::string sha256_hex(std::string_view bytes);

}  // namespace mleval
