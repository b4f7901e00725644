// SPDX-License-Identifier: Apache-2.0
#include "mathorch/core/utf8.hpp"

namespace mathorch::utf8 {

std::size_t char_width(std::string_view s, std::size_t i) {
    const auto lead = static_cast<unsigned char>(s[i]);
    std::size_t width = 1;
    if (lead >= 0xC2 && lead <= 0xDF) {
        width = 2;
    } else if (lead >= 0xE0 && lead <= 0xEF) {
        width = 3;
    } else if (lead >= 0xF0 && lead <= 0xF4) {
        width = 4;
    }
    if (width == 1 || i + width > s.size()) {
        return 1;
    }
    for (std::size_t k = 1; k < width; ++k) {
        if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) {
            return 1;
        }
    }
    return width;
}

std::size_t length(std::string_view s) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < s.size(); i += char_width(s, i)) {
        ++n;
    }
    return n;
}

std::string_view truncate(std::string_view s, std::size_t max_chars) {
    std::size_t i = 0;
    for (std::size_t n = 0; n < max_chars && i < s.size(); ++n) {
        i += char_width(s, i);
    }
    return s.substr(0, i);
}

} // namespace mathorch::utf8
