// SPDX-License-Identifier: Apache-2.0
#include "mathorch/backend/scripted.hpp"

#include <cctype>
#include <cstdio>
#include <regex>

#include "mathorch/core/errors.hpp"
#include "mathorch/core/jsonl.hpp"

namespace mathorch::backend {
namespace {

struct TimedPiece {
    Millis ready_at;
    std::string text;
};

class ScriptedStream final : public CompletionStream {
public:
    ScriptedStream(Clock& clock, const CompletionRequest& req, std::vector<TimedPiece> pieces, bool truncated)
        : CompletionStream(clock, req.params.stop_sequences, req.deadline),
          pieces_(std::move(pieces)),
          truncated_(truncated) {}

protected:
    std::optional<RawPiece> poll_source(Millis up_to) override {
        if (stopped_ || next_ >= pieces_.size() || pieces_[next_].ready_at > up_to) {
            return std::nullopt;
        }
        RawPiece piece;
        piece.text = pieces_[next_].text;
        ++next_;
        piece.end = next_ == pieces_.size();
        piece.length_limit = piece.end && truncated_;
        return piece;
    }

    std::optional<Millis> source_ready_at() const override {
        if (stopped_ || next_ >= pieces_.size()) {
            return std::nullopt;
        }
        return pieces_[next_].ready_at;
    }

    void stop_source() override { stopped_ = true; }

private:
    std::vector<TimedPiece> pieces_;
    bool truncated_;
    std::size_t next_ = 0;
    bool stopped_ = false;
};

std::size_t count_occurrences(std::string_view hay, std::string_view needle) {
    if (needle.empty()) {
        return 0;
    }
    std::size_t n = 0;
    for (auto pos = hay.find(needle); pos != std::string_view::npos; pos = hay.find(needle, pos + needle.size())) {
        ++n;
    }
    return n;
}

std::vector<ScriptSegment> segments_from_json(const json& arr) {
    if (!arr.is_array()) {
        throw FieldError("segments", "expected array");
    }
    std::vector<ScriptSegment> out;
    for (const auto& s : arr) {
        ScriptSegment seg;
        seg.text = s.at("text").get<std::string>();
        seg.delay_ms = s.value("delay_ms", std::int64_t{0});
        if (seg.delay_ms < 0) {
            throw FieldError("delay_ms", "must be non-negative");
        }
        out.push_back(std::move(seg));
    }
    return out;
}

} // namespace

PromptMatcher PromptMatcher::any() { return PromptMatcher{}; }

PromptMatcher PromptMatcher::prefix(std::string value) {
    PromptMatcher m;
    m.kind_ = Kind::prefix;
    m.value_ = std::move(value);
    return m;
}

PromptMatcher PromptMatcher::contains(std::string value) {
    PromptMatcher m;
    m.kind_ = Kind::contains;
    m.value_ = std::move(value);
    return m;
}

PromptMatcher PromptMatcher::regex(std::string pattern) {
    PromptMatcher m;
    m.kind_ = Kind::regex;
    auto re = std::make_shared<std::regex>(pattern, std::regex::ECMAScript);
    m.value_ = std::move(pattern);
    m.fn_ = [re](std::string_view prompt) {
        return std::regex_search(prompt.begin(), prompt.end(), *re);
    };
    return m;
}

PromptMatcher PromptMatcher::hash(std::string hex) {
    PromptMatcher m;
    m.kind_ = Kind::hash;
    m.value_ = std::move(hex);
    return m;
}

PromptMatcher PromptMatcher::predicate(std::function<bool(std::string_view)> fn) {
    PromptMatcher m;
    m.kind_ = Kind::predicate;
    m.fn_ = std::move(fn);
    return m;
}

bool PromptMatcher::matches(std::string_view prompt) const {
    switch (kind_) {
    case Kind::any: return true;
    case Kind::prefix: return prompt.substr(0, value_.size()) == value_;
    case Kind::contains: return prompt.find(value_) != std::string_view::npos;
    case Kind::hash: return prompt_hash(prompt) == value_;
    case Kind::regex:
    case Kind::predicate: return fn_(prompt);
    }
    return false;
}

std::string prompt_hash(std::string_view prompt) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : prompt) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ScriptedBehavior behavior_from_json(const json& j) {
    ScriptedBehavior b;
    if (auto it = j.find("matcher"); it != j.end()) {
        const auto kind = it->value("kind", std::string("any"));
        const auto value = it->value("value", std::string());
        if (kind == "any") {
            b.matcher = PromptMatcher::any();
        } else if (kind == "prefix") {
            b.matcher = PromptMatcher::prefix(value);
        } else if (kind == "contains") {
            b.matcher = PromptMatcher::contains(value);
        } else if (kind == "regex") {
            b.matcher = PromptMatcher::regex(value);
        } else if (kind == "hash") {
            b.matcher = PromptMatcher::hash(value);
        } else {
            throw FieldError("matcher", "unknown kind '" + kind + "'");
        }
    }
    if (auto it = j.find("turns"); it != j.end()) {
        for (const auto& t : *it) {
            b.turns.push_back(segments_from_json(t));
        }
    } else if (auto seg = j.find("segments"); seg != j.end()) {
        b.turns.push_back(segments_from_json(*seg));
    } else {
        throw FieldError("segments", "missing");
    }
    if (b.turns.empty() || b.turns.front().empty()) {
        throw FieldError("segments", "at least one segment required");
    }
    return b;
}

std::vector<ScriptedBehavior> load_scenario(const std::filesystem::path& path) {
    JsonlLineReader reader(path);
    std::vector<ScriptedBehavior> out;
    while (auto item = reader.next()) {
        try {
            out.push_back(behavior_from_json(item->second));
        } catch (const FieldError& e) {
            throw SchemaError(item->first, e.field(), e.what());
        } catch (const json::exception& e) {
            throw SchemaError(item->first, "<json>", e.what());
        }
    }
    return out;
}

ScriptedBackend::ScriptedBackend(Clock& clock, std::vector<ScriptedBehavior> behaviors, std::string turn_marker)
    : clock_(clock), behaviors_(std::move(behaviors)), turn_marker_(std::move(turn_marker)) {}

std::size_t ScriptedBackend::token_prefix_bytes(std::string_view text, std::int64_t max_tokens) {
    std::int64_t tokens = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        std::size_t j = i;
        while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) {
            ++j;
        }
        if (j == text.size()) {
            return text.size();
        }
        if (tokens == max_tokens) {
            return i;
        }
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) {
            ++j;
        }
        ++tokens;
        i = j;
    }
    return text.size();
}

std::unique_ptr<CompletionStream> ScriptedBackend::complete_streaming(const CompletionRequest& request) {
    if (request.prompt.empty()) {
        throw BackendError(400, "prompt must be non-empty");
    }
    std::vector<const ScriptedBehavior*> matching;
    for (const auto& b : behaviors_) {
        if (b.matcher.matches(request.prompt)) {
            matching.push_back(&b);
        }
    }
    {
        std::lock_guard lock(mutex_);
        requests_.push_back(request);
    }
    if (matching.empty()) {
        throw BackendError(404, "no scripted behavior matches the prompt");
    }
    std::size_t pick = 0;
    if (request.params.seed) {
        const auto seed = static_cast<std::uint64_t>(*request.params.seed);
        pick = static_cast<std::size_t>(seed % matching.size());
    }
    const auto& behavior = *matching[pick];
    const auto turn = count_occurrences(request.prompt, turn_marker_);

    std::vector<TimedPiece> pieces;
    bool truncated = false;
    auto at = clock_.now();
    std::int64_t budget = request.params.max_tokens;
    std::string carried;
    if (turn < behavior.turns.size()) {
        for (const auto& seg : behavior.turns[turn]) {
            at += Millis{seg.delay_ms};
            // Token boundaries may span segments; count over the joined text.
            const auto joined = carried + seg.text;
            const auto keep = token_prefix_bytes(joined, budget);
            if (keep < joined.size()) {
                pieces.push_back({at, joined.substr(carried.size(), keep > carried.size() ? keep - carried.size() : 0)});
                truncated = true;
                break;
            }
            pieces.push_back({at, seg.text});
            carried = joined;
        }
    }
    if (pieces.empty()) {
        pieces.push_back({clock_.now(), std::string{}});
    }
    return std::make_unique<ScriptedStream>(clock_, request, std::move(pieces), truncated);
}

std::size_t ScriptedBackend::call_count() const {
    std::lock_guard lock(mutex_);
    return requests_.size();
}

std::vector<CompletionRequest> ScriptedBackend::requests() const {
    std::lock_guard lock(mutex_);
    return requests_;
}

} // namespace mathorch::backend
