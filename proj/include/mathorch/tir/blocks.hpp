// SPDX-License-Identifier: Apache-2.0
//
// Text-level helpers for tool-integrated transcripts: code-tag
// normalization, block counting and the executed-output section format.

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "mathorch/sandbox/sandbox.hpp"
#include "mathorch/tir/config.hpp"

namespace mathorch::tir {

/// Opens every executed-output section in a transcript.
inline constexpr std::string_view kOutputFence = "```output";
inline constexpr std::string_view kOutputTruncatedMarker = "[output truncated]";
inline constexpr std::string_view kTimeoutNotice = "[execution timed out]";

struct NormalizedText {
    std::string text;
    // Set when a "```python" fence never closes; `text` is then the input unchanged.
    bool unbalanced = false;
};

/// Rewrites "```python" ... "```\n" fences to the configured code tags.
/// Other fences are left alone. Idempotent.
NormalizedText normalize_code_tags(std::string_view text, const TirConfig& config = {});

struct CodeBlock {
    std::string code;
    // Offset of the begin tag and one past the end tag.
    std::size_t begin = 0;
    std::size_t end = 0;
};

/// Complete begin/end tag pairs in order, ignoring anything inside
/// executed-output sections.
std::vector<CodeBlock> extract_code_blocks(std::string_view text, const TirConfig& config = {});

int count_code_blocks(std::string_view text, const TirConfig& config = {});

/// Output shown to the model: stdout, plus stderr when the run did not succeed.
std::string shown_output(const sandbox::ExecuteResponse& exec);

/// Output section appended after a code block, ending with the
/// remaining-executions line.
std::string render_output_block(const sandbox::ExecuteResponse& exec, int remaining, int cap);

std::string remaining_line(int remaining);

} // namespace mathorch::tir
