// SPDX-License-Identifier: Apache-2.0
#include "mathorch/tir/blocks.hpp"

#include "mathorch/core/utf8.hpp"

namespace mathorch::tir {
namespace {

constexpr std::string_view kPythonFence = "```python";
constexpr std::string_view kFence = "```";

} // namespace

NormalizedText normalize_code_tags(std::string_view text, const TirConfig& config) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (true) {
        const auto open = text.find(kPythonFence, i);
        if (open == std::string_view::npos) {
            out.append(text.substr(i));
            return {std::move(out), false};
        }
        const auto body = open + kPythonFence.size();
        const auto close = text.find(kFence, body);
        if (close == std::string_view::npos) {
            return {std::string(text), true};
        }
        out.append(text.substr(i, open - i));
        out += config.code_begin_tag;
        out.append(text.substr(body, close - body));
        out += config.code_end_tag;
        i = close + kFence.size();
        if (i < text.size() && text[i] == '\n') {
            ++i;
        }
    }
}

std::vector<CodeBlock> extract_code_blocks(std::string_view text, const TirConfig& config) {
    std::vector<CodeBlock> blocks;
    std::size_t i = 0;
    while (i < text.size()) {
        const auto begin = text.find(config.code_begin_tag, i);
        const auto output = text.find(kOutputFence, i);
        if (begin == std::string_view::npos) {
            break;
        }
        if (output != std::string_view::npos && output < begin) {
            const auto close = text.find(kFence, output + kOutputFence.size());
            if (close == std::string_view::npos) {
                break;
            }
            i = close + kFence.size();
            continue;
        }
        const auto body = begin + config.code_begin_tag.size();
        const auto end = text.find(config.code_end_tag, body);
        if (end == std::string_view::npos) {
            break;
        }
        blocks.push_back({std::string(text.substr(body, end - body)), begin, end + config.code_end_tag.size()});
        i = end + config.code_end_tag.size();
    }
    return blocks;
}

int count_code_blocks(std::string_view text, const TirConfig& config) {
    return static_cast<int>(extract_code_blocks(text, config).size());
}

std::string shown_output(const sandbox::ExecuteResponse& exec) {
    if (exec.status == ExecStatus::ok) {
        return exec.stdout_text;
    }
    return exec.stdout_text + exec.stderr_text;
}

std::string remaining_line(int remaining) {
    if (remaining <= 0) {
        return "[Code executions remaining: 0 — no further code may be executed]";
    }
    return "[Code executions remaining: " + std::to_string(remaining) + "]";
}

std::string render_output_block(const sandbox::ExecuteResponse& exec, int remaining, int cap) {
    const auto raw = shown_output(exec);
    const auto body = utf8::truncate(raw, static_cast<std::size_t>(cap < 0 ? 0 : cap));
    std::string out = "\n";
    out += kOutputFence;
    out += '\n';
    out.append(body);
    if (!body.empty() && body.back() != '\n') {
        out += '\n';
    }
    if (body.size() < raw.size()) {
        out += kOutputTruncatedMarker;
        out += '\n';
    }
    if (exec.status == ExecStatus::timeout) {
        out += kTimeoutNotice;
        out += '\n';
    }
    out += kFence;
    out += '\n';
    out += remaining_line(remaining);
    out += '\n';
    return out;
}

} // namespace mathorch::tir
