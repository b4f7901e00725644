// SPDX-License-Identifier: Apache-2.0
#include "mathorch/judge/answer.hpp"

#include <cctype>

namespace mathorch::judge {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) {
        s.remove_prefix(1);
    }
    while (!s.empty() && is_space(s.back())) {
        s.remove_suffix(1);
    }
    return s;
}

// One pass of the normalization rules; normalize_answer() iterates to a fixed point.
std::string normalize_pass(std::string_view raw) {
    auto s = trim(raw);
    if (s.size() >= 2 && s.front() == '$' && s.back() == '$') {
        s = trim(s.substr(1, s.size() - 2));
    }

    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size();) {
        if (s[i] == '\\') {
            std::size_t j = i + 1;
            while (j < s.size() && is_alpha(s[j])) {
                ++j;
            }
            if (j == i + 1) {
                // Escaped symbol such as "\{" or "\,": copy verbatim.
                out.push_back('\\');
                if (j < s.size()) {
                    out.push_back(s[j]);
                    ++j;
                }
                i = j;
                continue;
            }
            const auto cmd = s.substr(i + 1, j - i - 1);
            if (cmd != "left" && cmd != "right") {
                out.append(s.substr(i, j - i));
            }
            i = j;
            continue;
        }
        if (is_alpha(s[i])) {
            while (i < s.size() && is_alpha(s[i])) {
                out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(s[i]))));
                ++i;
            }
            continue;
        }
        if (is_space(s[i])) {
            while (i < s.size() && is_space(s[i])) {
                ++i;
            }
            out.push_back(' ');
            continue;
        }
        out.push_back(s[i]);
        ++i;
    }

    std::string tight;
    tight.reserve(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i] == ' ') {
            const bool after_open = !tight.empty() && (tight.back() == '(' || tight.back() == '[' ||
                                                       tight.back() == '{');
            const bool before_close = i + 1 < out.size() &&
                                      (out[i + 1] == ')' || out[i + 1] == ']' || out[i + 1] == '}');
            if (after_open || before_close) {
                continue;
            }
        }
        tight.push_back(out[i]);
    }
    return std::string(trim(tight));
}

std::optional<Rational> parse_decimal(std::string_view s, bool& exact) {
    if (s.empty()) {
        return std::nullopt;
    }
    std::size_t i = 0;
    boost::multiprecision::cpp_int mantissa = 0;
    long frac_digits = 0;
    bool any_digit = false;
    while (i < s.size() && is_digit(s[i])) {
        mantissa = mantissa * 10 + (s[i] - '0');
        any_digit = true;
        ++i;
    }
    if (i < s.size() && s[i] == '.') {
        exact = false;
        ++i;
        while (i < s.size() && is_digit(s[i])) {
            mantissa = mantissa * 10 + (s[i] - '0');
            ++frac_digits;
            any_digit = true;
            ++i;
        }
    }
    if (!any_digit) {
        return std::nullopt;
    }
    long exponent = 0;
    if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
        exact = false;
        ++i;
        bool neg = false;
        if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
            neg = s[i] == '-';
            ++i;
        }
        if (i == s.size()) {
            return std::nullopt;
        }
        while (i < s.size() && is_digit(s[i])) {
            exponent = exponent * 10 + (s[i] - '0');
            if (exponent > 4000) {
                return std::nullopt;
            }
            ++i;
        }
        exponent = neg ? -exponent : exponent;
    }
    if (i != s.size()) {
        return std::nullopt;
    }
    const long scale = exponent - frac_digits;
    boost::multiprecision::cpp_int ten_pow = boost::multiprecision::pow(boost::multiprecision::cpp_int(10),
                                                                        static_cast<unsigned>(scale < 0 ? -scale : scale));
    if (scale >= 0) {
        return Rational(mantissa * ten_pow);
    }
    return Rational(mantissa, ten_pow);
}

// Reads "{...}" with balanced braces starting at s[i]; advances i past it.
std::optional<std::string_view> read_group(std::string_view s, std::size_t& i) {
    if (i >= s.size() || s[i] != '{') {
        return std::nullopt;
    }
    int depth = 0;
    for (std::size_t j = i; j < s.size(); ++j) {
        if (s[j] == '{') {
            ++depth;
        } else if (s[j] == '}' && --depth == 0) {
            auto inner = s.substr(i + 1, j - i - 1);
            i = j + 1;
            return inner;
        }
    }
    return std::nullopt;
}

std::optional<NumericValue> parse_unsigned(std::string_view s) {
    for (std::string_view cmd : {"\\frac", "\\dfrac", "\\tfrac"}) {
        if (s.substr(0, cmd.size()) == cmd) {
            std::size_t i = cmd.size();
            auto num = read_group(s, i);
            auto den = num ? read_group(s, i) : std::nullopt;
            if (!num || !den || i != s.size()) {
                return std::nullopt;
            }
            auto a = parse_numeric(*num);
            auto b = parse_numeric(*den);
            if (!a || !b || b->value == 0) {
                return std::nullopt;
            }
            return NumericValue{a->value / b->value, a->exact_form && b->exact_form};
        }
    }
    if (auto slash = s.find('/'); slash != std::string_view::npos) {
        bool exact_a = true;
        bool exact_b = true;
        auto a = parse_decimal(s.substr(0, slash), exact_a);
        auto b = parse_decimal(s.substr(slash + 1), exact_b);
        if (!a || !b || *b == 0) {
            return std::nullopt;
        }
        return NumericValue{*a / *b, exact_a && exact_b};
    }
    bool exact = true;
    auto v = parse_decimal(s, exact);
    if (!v) {
        return std::nullopt;
    }
    return NumericValue{*v, exact};
}

} // namespace

std::optional<std::string> extract_boxed(std::string_view text) {
    constexpr std::string_view kBoxed = "\\boxed";
    std::optional<std::size_t> last_open;
    for (auto pos = text.find(kBoxed); pos != std::string_view::npos; pos = text.find(kBoxed, pos + 1)) {
        auto k = pos + kBoxed.size();
        while (k < text.size() && text[k] == ' ') {
            ++k;
        }
        if (k < text.size() && text[k] == '{') {
            last_open = k;
        }
    }
    if (!last_open) {
        return std::nullopt;
    }
    auto i = *last_open;
    auto inner = read_group(text, i);
    if (!inner) {
        return std::nullopt;
    }
    return std::string(*inner);
}

std::string normalize_answer(std::string_view raw) {
    std::string cur = normalize_pass(raw);
    // Every pass that changes anything but letter case shrinks the string,
    // so this terminates quickly.
    for (int guard = 0; guard < 64; ++guard) {
        auto next = normalize_pass(cur);
        if (next == cur) {
            break;
        }
        cur = std::move(next);
    }
    return cur;
}

std::optional<NumericValue> parse_numeric(std::string_view normalized) {
    auto s = trim(normalized);
    while (s.size() >= 2 && s.front() == '{' && s.back() == '}') {
        std::size_t i = 0;
        auto inner = read_group(s, i);
        if (!inner || i != s.size()) {
            break;
        }
        s = trim(*inner);
    }
    bool negative = false;
    if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
        negative = s.front() == '-';
        s = trim(s.substr(1));
    }
    auto v = parse_unsigned(s);
    if (v && negative) {
        v->value = -v->value;
    }
    return v;
}

bool numerically_equal(const NumericValue& a, const NumericValue& b) {
    if (a.exact_form && b.exact_form) {
        return a.value == b.value;
    }
    const Rational diff = abs(a.value - b.value);
    const Rational scale = std::max(abs(a.value), abs(b.value));
    return diff <= kRelativeTolerance * scale;
}

} // namespace mathorch::judge
