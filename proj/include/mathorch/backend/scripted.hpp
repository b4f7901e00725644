// SPDX-License-Identifier: Apache-2.0
//
// Deterministic scripted completion backend. Responses are emitted as timed
// segments on the injected clock, so tests can drive a VirtualClock and get
// byte-identical streams on every run.

#pragma once

#include <filesystem>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include "mathorch/backend/completion.hpp"

namespace mathorch::backend {

struct ScriptSegment {
    std::string text;
    std::int64_t delay_ms = 0;

    bool operator==(const ScriptSegment&) const = default;
};

class PromptMatcher {
public:
    enum class Kind { any, prefix, contains, regex, hash, predicate };

    static PromptMatcher any();
    static PromptMatcher prefix(std::string value);
    static PromptMatcher contains(std::string value);
    static PromptMatcher regex(std::string pattern);
    /// `hex` is the 16-digit FNV-1a 64 hash of the full prompt (see prompt_hash()).
    static PromptMatcher hash(std::string hex);
    static PromptMatcher predicate(std::function<bool(std::string_view)> fn);

    bool matches(std::string_view prompt) const;
    Kind kind() const noexcept { return kind_; }
    const std::string& value() const noexcept { return value_; }

private:
    Kind kind_ = Kind::any;
    std::string value_;
    std::function<bool(std::string_view)> fn_;
};

std::string prompt_hash(std::string_view prompt);

/// One scripted reply. A multi-turn behavior serves `turns[i]` when the prompt
/// already contains `i` occurrences of the backend's turn marker, which lets a
/// single behavior script a whole tool-integrated generation.
struct ScriptedBehavior {
    PromptMatcher matcher;
    std::vector<std::vector<ScriptSegment>> turns;
};

/// Builds a behavior from one scenario-file object:
/// {"matcher": {"kind": "contains", "value": "..."},
///  "segments": [{"text": "...", "delay_ms": 10}, ...]}   or "turns": [[...], ...]
ScriptedBehavior behavior_from_json(const json& j);
std::vector<ScriptedBehavior> load_scenario(const std::filesystem::path& path);

class ScriptedBackend final : public CompletionBackend {
public:
    static constexpr std::string_view kDefaultTurnMarker = "```output";

    ScriptedBackend(Clock& clock, std::vector<ScriptedBehavior> behaviors,
                    std::string turn_marker = std::string(kDefaultTurnMarker));

    /// Among matching behaviors the one at (seed mod count) is used; an
    /// unseeded request takes the first match. Throws BackendError(404) when
    /// nothing matches.
    std::unique_ptr<CompletionStream> complete_streaming(const CompletionRequest& request) override;

    Clock& clock() override { return clock_; }

    std::size_t call_count() const;
    std::vector<CompletionRequest> requests() const;

    /// Splits `text` into mock tokens: each token is a run of non-space
    /// characters together with the whitespace preceding it.
    static std::size_t token_prefix_bytes(std::string_view text, std::int64_t max_tokens);

private:
    Clock& clock_;
    std::vector<ScriptedBehavior> behaviors_;
    std::string turn_marker_;
    mutable std::mutex mutex_;
    std::vector<CompletionRequest> requests_;
};

} // namespace mathorch::backend
