// SPDX-License-Identifier: Apache-2.0
#include "mathorch/backend/completion.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <thread>

#include "mathorch/core/errors.hpp"
#include "mathorch/core/shutdown.hpp"

namespace mathorch::backend {

std::string_view to_string(FinishKind kind) {
    switch (kind) {
    case FinishKind::stop_sequence: return "stop_sequence";
    case FinishKind::max_tokens: return "max_tokens";
    case FinishKind::cancelled: return "cancelled";
    case FinishKind::deadline: return "deadline";
    case FinishKind::backend_end: return "backend_end";
    }
    return "backend_end";
}

std::int64_t approx_token_count(std::string_view text) {
    std::int64_t n = 0;
    bool in_word = false;
    for (char c : text) {
        const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (!space && !in_word) {
            ++n;
        }
        in_word = !space;
    }
    return n;
}

std::size_t held_back_length(std::string_view text, const std::vector<std::string>& stops) {
    std::size_t best = 0;
    for (const auto& stop : stops) {
        const auto max_len = std::min(stop.size() - 1, text.size());
        for (std::size_t len = max_len; len > best; --len) {
            if (text.substr(text.size() - len) == std::string_view(stop).substr(0, len)) {
                best = len;
                break;
            }
        }
    }
    return best;
}

std::optional<std::pair<std::size_t, std::size_t>> find_first_stop(std::string_view text,
                                                                   const std::vector<std::string>& stops) {
    std::optional<std::pair<std::size_t, std::size_t>> best;
    for (std::size_t i = 0; i < stops.size(); ++i) {
        const auto pos = text.find(stops[i]);
        if (pos != std::string_view::npos && (!best || pos < best->first)) {
            best = std::make_pair(pos, i);
        }
    }
    return best;
}

CompletionStream::CompletionStream(Clock& clock, std::vector<std::string> stops, std::optional<Millis> deadline)
    : clock_(clock), stops_(std::move(stops)), deadline_(deadline) {}

CompletionChunk CompletionStream::finalize(FinishReason reason, std::string text) {
    finish_ = reason;
    emitted_ += text;
    if (reason.kind != FinishKind::backend_end && reason.kind != FinishKind::max_tokens) {
        stop_source();
    }
    return CompletionChunk{std::move(text), reason};
}

std::optional<CompletionChunk> CompletionStream::poll() {
    if (finish_) {
        return std::nullopt;
    }
    if (cancel_.cancelled()) {
        return finalize({FinishKind::cancelled, 0}, std::exchange(pending_, {}));
    }
    const auto now = clock_.now();
    const auto up_to = (deadline_ && *deadline_ < now) ? *deadline_ : now;
    while (auto piece = poll_source(up_to)) {
        if (piece->usage_tokens) {
            usage_tokens_ = piece->usage_tokens;
        }
        pending_ += piece->text;
        if (auto hit = find_first_stop(pending_, stops_)) {
            auto text = pending_.substr(0, hit->first);
            pending_.clear();
            return finalize({FinishKind::stop_sequence, hit->second}, std::move(text));
        }
        if (piece->end) {
            const auto kind = piece->length_limit ? FinishKind::max_tokens : FinishKind::backend_end;
            return finalize({kind, 0}, std::exchange(pending_, {}));
        }
        const auto hold = held_back_length(pending_, stops_);
        if (pending_.size() > hold) {
            auto text = pending_.substr(0, pending_.size() - hold);
            pending_.erase(0, pending_.size() - hold);
            emitted_ += text;
            return CompletionChunk{std::move(text), std::nullopt};
        }
    }
    if (deadline_ && now >= *deadline_) {
        return finalize({FinishKind::deadline, 0}, std::exchange(pending_, {}));
    }
    return std::nullopt;
}

std::optional<Millis> CompletionStream::next_ready_at() const {
    if (finish_) {
        return std::nullopt;
    }
    if (cancel_.cancelled()) {
        return clock_.now();
    }
    auto src = source_ready_at();
    if (deadline_ && (!src || *deadline_ < *src)) {
        return deadline_;
    }
    return src;
}

CompletionResult drain(CompletionStream& stream, Clock& clock) {
    std::string text;
    while (true) {
        while (auto chunk = stream.poll()) {
            text += chunk->text_delta;
            if (chunk->finish) {
                return CompletionResult{std::move(text), *chunk->finish, stream.usage_tokens()};
            }
        }
        const auto ready = stream.next_ready_at();
        if (clock.is_virtual()) {
            if (!ready) {
                throw Error("virtual-clock stream cannot predict its next chunk");
            }
            clock.sleep_until(*ready);
        } else {
            auto wait = Millis{50};
            if (ready) {
                wait = std::clamp(*ready - clock.now(), Millis{0}, wait);
            }
            stream.wait_for_data(wait);
        }
    }
}

CompletionResult complete_blocking(CompletionBackend& backend, const CompletionRequest& request) {
    auto stream = backend.complete_streaming(request);
    return drain(*stream, backend.clock());
}

std::vector<CompletionResult> complete_batch(CompletionBackend& backend, const std::vector<CompletionRequest>& requests,
                                             std::size_t max_in_flight) {
    max_in_flight = std::max<std::size_t>(1, max_in_flight);
    std::vector<CompletionResult> results(requests.size());
    std::vector<std::unique_ptr<CompletionStream>> live(requests.size());
    std::vector<std::string> texts(requests.size());
    std::size_t next = 0;
    std::size_t open = 0;
    std::size_t done = 0;
    auto& clock = backend.clock();
    while (done < requests.size()) {
        while (open < max_in_flight && next < requests.size()) {
            live[next] = backend.complete_streaming(requests[next]);
            ++next;
            ++open;
        }
        bool progressed = false;
        for (std::size_t i = 0; i < next; ++i) {
            if (!live[i]) {
                continue;
            }
            if (shutdown_requested()) {
                live[i]->cancel();
            }
            while (auto chunk = live[i]->poll()) {
                progressed = true;
                texts[i] += chunk->text_delta;
                if (chunk->finish) {
                    results[i] = CompletionResult{std::move(texts[i]), *chunk->finish, live[i]->usage_tokens()};
                    live[i].reset();
                    --open;
                    ++done;
                    break;
                }
            }
        }
        if (progressed || done == requests.size()) {
            continue;
        }
        std::optional<Millis> earliest;
        bool unpredictable = false;
        CompletionStream* only = nullptr;
        for (std::size_t i = 0; i < next; ++i) {
            if (!live[i]) {
                continue;
            }
            only = open == 1 ? live[i].get() : nullptr;
            if (auto t = live[i]->next_ready_at()) {
                earliest = earliest ? std::min(*earliest, *t) : *t;
            } else {
                unpredictable = true;
            }
        }
        if (clock.is_virtual() && !unpredictable) {
            if (!earliest) {
                throw Error("virtual-clock streams cannot predict their next chunk");
            }
            clock.sleep_until(*earliest);
            continue;
        }
        auto wait = only ? Millis{50} : Millis{2};
        if (earliest) {
            wait = std::clamp(*earliest - clock.now(), Millis{0}, wait);
        }
        if (only) {
            only->wait_for_data(wait);
        } else if (wait > Millis{0}) {
            std::this_thread::sleep_for(wait);
        }
    }
    return results;
}

bool parse_yes_no(std::string_view completion, const std::optional<std::string>& pattern) {
    const std::string text(completion);
    auto verdict = [](std::string word) {
        std::transform(word.begin(), word.end(), word.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        return word == "yes";
    };
    if (pattern) {
        const std::regex re(*pattern, std::regex::icase | std::regex::ECMAScript);
        std::smatch m;
        if (std::regex_search(text, m, re) && m.size() > 1 && m[1].matched) {
            return verdict(m[1].str());
        }
        throw UnparseableVerdict("no verdict matching the configured pattern");
    }
    static const std::regex labelled(R"((?:judge?ment|verdict)\s*:\s*\**\s*(yes|no)\b)", std::regex::icase);
    std::optional<std::string> last;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), labelled); it != std::sregex_iterator(); ++it) {
        last = (*it)[1].str();
    }
    if (last) {
        return verdict(*last);
    }
    static const std::regex leading(R"(^[\s\W]*(yes|no)\b)", std::regex::icase);
    std::smatch m;
    if (std::regex_search(text, m, leading)) {
        return verdict(m[1].str());
    }
    throw UnparseableVerdict("cannot parse a yes/no verdict from: " + text.substr(0, 80));
}

bool judge_yes_no(CompletionBackend& backend, const std::string& prompt, const SamplingParams& params,
                  const std::optional<std::string>& pattern) {
    auto result = complete_blocking(backend, CompletionRequest{prompt, params, std::nullopt});
    return parse_yes_no(result.text, pattern);
}

} // namespace mathorch::backend
