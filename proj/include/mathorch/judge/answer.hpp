// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

namespace mathorch::judge {

using Rational = boost::multiprecision::cpp_rational;

/// Content of the last `\boxed{...}` with nested braces respected; nullopt
/// when there is none or the last one never closes.
std::optional<std::string> extract_boxed(std::string_view text);

/// Canonical comparison form: trimmed, whitespace collapsed, \left/\right
/// and one outer $...$ removed, plain words lowercased (LaTeX commands are
/// kept). Idempotent.
std::string normalize_answer(std::string_view raw);

struct NumericValue {
    Rational value;
    // Integers and fractions compare exactly; decimal renderings get a
    // relative tolerance.
    bool exact_form = true;
};

/// Parses integers, decimals (optional exponent), a/b and \frac{a}{b}
/// (also \dfrac, \tfrac) with an optional sign. Input should be normalized.
std::optional<NumericValue> parse_numeric(std::string_view normalized);

/// Tolerance used when either side is a decimal rendering.
inline const Rational kRelativeTolerance{1, 1000000000};

bool numerically_equal(const NumericValue& a, const NumericValue& b);

} // namespace mathorch::judge
