#include "polyvector/roman.hpp"

#include <array>
#include <utility>

#include "polyvector/errors.hpp"

namespace polyvector::roman {

namespace {

constexpr std::array<std::pair<int, const char*>, 13> kTable{{
    {1000, "M"},
    {900, "CM"},
    {500, "D"},
    {400, "CD"},
    {100, "C"},
    {90, "XC"},
    {50, "L"},
    {40, "XL"},
    {10, "X"},
    {9, "IX"},
    {5, "V"},
    {4, "IV"},
    {1, "I"},
}};

}  // namespace

std::optional<int> to_arabic(std::string_view numeral) {
    if (numeral.empty()) return std::nullopt;
    int value = 0;
    std::size_t pos = 0;
    for (const auto& [weight, glyph] : kTable) {
        std::string_view g{glyph};
        // Repetition limits: single-letter powers of ten up to 3 times,
        // everything else at most once.
        int max_rep = (g.size() == 1 && (weight == 1000 || weight == 100 || weight == 10 || weight == 1)) ? 3 : 1;
        int rep = 0;
        while (rep < max_rep && numeral.substr(pos, g.size()) == g) {
            value += weight;
            pos += g.size();
            ++rep;
        }
    }
    if (pos != numeral.size() || value == 0) return std::nullopt;
    // Reject non-canonical spellings such as "IIII" slipping through via
    // mixed matches: re-encode and compare.
    if (from_arabic(value) != numeral) return std::nullopt;
    return value;
}

std::string from_arabic(int value) {
    if (value <= 0 || value > 3999) {
        throw Error::structure("roman numeral out of range: " + std::to_string(value));
    }
    std::string out;
    for (const auto& [weight, glyph] : kTable) {
        while (value >= weight) {
            out += glyph;
            value -= weight;
        }
    }
    return out;
}

}  // namespace polyvector::roman
