// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "mathorch/core/types.hpp"

namespace mathorch::tir {

struct TirConfig {
    std::string code_begin_tag = "<tool_call>";
    std::string code_end_tag = "</tool_call>";
    int max_code_executions = 6;
    // Data generation draws limits from [1, 8]; competition mode uses a fixed cap.
    bool data_generation = false;
    int output_char_cap = 200;
    std::int64_t exec_timeout_ms = 2000;
    // One sandbox session for all blocks of a generation; false runs every
    // block in a fresh session.
    bool persistent_sessions = true;
    SamplingParams params;
};

inline constexpr int kMaxDataGenCodeExecutions = 8;

/// Throws ConfigError naming the offending field.
void validate(const TirConfig& c);

} // namespace mathorch::tir
