#include "cnu/time.hpp"

#include <cctype>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace cnu {
namespace {

// Exact decimal -> integer scaling: "1.5" with exponent 6 -> 1500000.
Nanos parse_scaled(std::string_view digits, int exponent, std::string_view original)
{
    auto fail = [&](const char* why) {
        throw std::invalid_argument("invalid duration '" + std::string(original) + "': " + why);
    };
    if (digits.empty())
        fail("missing number");

    bool negative = false;
    if (digits.front() == '-' || digits.front() == '+') {
        negative = digits.front() == '-';
        digits.remove_prefix(1);
    }

    std::int64_t value = 0;
    int fraction_digits = -1;
    bool any_digit = false;
    for (char c : digits) {
        if (c == '.') {
            if (fraction_digits >= 0)
                fail("more than one decimal point");
            fraction_digits = 0;
            continue;
        }
        if (!std::isdigit(static_cast<unsigned char>(c)))
            fail("unexpected character");
        any_digit = true;
        if (value > (std::numeric_limits<std::int64_t>::max() - 9) / 10)
            fail("overflow");
        value = value * 10 + (c - '0');
        if (fraction_digits >= 0)
            ++fraction_digits;
    }
    if (!any_digit)
        fail("missing number");

    int shift = exponent - (fraction_digits < 0 ? 0 : fraction_digits);
    for (; shift > 0; --shift) {
        if (value > std::numeric_limits<std::int64_t>::max() / 10)
            fail("overflow");
        value *= 10;
    }
    if (shift < 0) {
        std::int64_t divisor = 1;
        for (; shift < 0 && divisor <= std::numeric_limits<std::int64_t>::max() / 10; ++shift)
            divisor *= 10;
        value = shift < 0 ? 0 : (value + divisor / 2) / divisor;
    }
    return Nanos{negative ? -value : value};
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return s;
}

}  // namespace

Nanos parse_duration(std::string_view text)
{
    std::string_view s = trim(text);
    struct Unit {
        std::string_view suffix;
        int exponent;
    };
    // "ns", "us", "ms" must be tested before the bare "s".
    static constexpr Unit units[] = {{"ns", 0}, {"us", 3}, {"ms", 6}, {"s", 9}};
    for (const auto& u : units) {
        if (s.size() > u.suffix.size() && s.ends_with(u.suffix))
            return parse_scaled(trim(s.substr(0, s.size() - u.suffix.size())), u.exponent, text);
    }
    return parse_scaled(s, 0, text);
}

Nanos parse_milliseconds(std::string_view text)
{
    return parse_scaled(trim(text), 6, text);
}

}  // namespace cnu
