// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace mathorch::utf8 {

/// Byte length of the code point starting at `s[i]`. Malformed or truncated
/// sequences count as a single one-byte character.
std::size_t char_width(std::string_view s, std::size_t i);

/// Number of characters (code points, malformed bytes counted singly).
std::size_t length(std::string_view s);

/// First `max_chars` characters of `s`; never splits a code point.
std::string_view truncate(std::string_view s, std::size_t max_chars);

} // namespace mathorch::utf8
