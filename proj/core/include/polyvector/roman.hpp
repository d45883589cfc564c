#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace polyvector::roman {

/// Parses an uppercase roman numeral (strict subtractive form, 1..3999).
/// Returns nullopt on malformed input.
std::optional<int> to_arabic(std::string_view numeral);

/// Formats 1..3999 as an uppercase roman numeral.
std::string from_arabic(int value);

}  // namespace polyvector::roman
