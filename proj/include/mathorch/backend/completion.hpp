// SPDX-License-Identifier: Apache-2.0
//
// Text-completion streams with client-side stop-sequence matching,
// cooperative cancellation and deadlines.

#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mathorch/core/clock.hpp"
#include "mathorch/core/types.hpp"

namespace mathorch::backend {

enum class FinishKind { stop_sequence, max_tokens, cancelled, deadline, backend_end };

std::string_view to_string(FinishKind kind);

struct FinishReason {
    FinishKind kind = FinishKind::backend_end;
    // Index into the request's stop list; meaningful for stop_sequence only.
    std::size_t stop_index = 0;

    bool operator==(const FinishReason&) const = default;
};

struct CompletionChunk {
    std::string text_delta;
    std::optional<FinishReason> finish;
};

struct CompletionRequest {
    std::string prompt;
    SamplingParams params;
    std::optional<Millis> deadline;
};

/// Shared cancellation flag. Copies refer to the same flag and may be handed
/// to other threads.
class CancelHandle {
public:
    CancelHandle() : flag_(std::make_shared<std::atomic<bool>>(false)) {}

    void cancel() const { flag_->store(true); }
    bool cancelled() const { return flag_->load(); }

private:
    std::shared_ptr<std::atomic<bool>> flag_;
};

/// Whitespace-delimited word count; used when a backend reports no usage.
std::int64_t approx_token_count(std::string_view text);

/// Longest suffix of `text` that is a proper prefix of some stop sequence.
std::size_t held_back_length(std::string_view text, const std::vector<std::string>& stops);

/// Earliest stop-sequence occurrence in `text`: (position, stop index).
std::optional<std::pair<std::size_t, std::size_t>> find_first_stop(std::string_view text,
                                                                   const std::vector<std::string>& stops);

/// A piece of raw backend output, before stop handling.
struct RawPiece {
    std::string text;
    bool end = false;
    bool length_limit = false;
    std::optional<std::int64_t> usage_tokens;
};

/// Pull-based completion stream. poll() never blocks: it returns the next
/// chunk if one is available now, or nullopt. Exactly one chunk carries a
/// finish reason and nothing follows it.
class CompletionStream {
public:
    CompletionStream(Clock& clock, std::vector<std::string> stops, std::optional<Millis> deadline);
    virtual ~CompletionStream() = default;

    CompletionStream(const CompletionStream&) = delete;
    CompletionStream& operator=(const CompletionStream&) = delete;

    std::optional<CompletionChunk> poll();

    /// Earliest time at which poll() may make progress; nullopt when the
    /// source is driven by real I/O and cannot predict it.
    std::optional<Millis> next_ready_at() const;

    /// Blocks until the source may have data, at most `max_wait` (real I/O only).
    virtual void wait_for_data(Millis max_wait) { (void)max_wait; }

    bool finished() const noexcept { return finish_.has_value(); }
    const std::optional<FinishReason>& finish_reason() const noexcept { return finish_; }
    const std::string& emitted_text() const noexcept { return emitted_; }
    std::optional<std::int64_t> usage_tokens() const noexcept { return usage_tokens_; }

    CancelHandle cancel_handle() const { return cancel_; }
    void cancel() const { cancel_.cancel(); }

protected:
    /// Next raw piece whose availability time is <= `up_to`.
    virtual std::optional<RawPiece> poll_source(Millis up_to) = 0;
    virtual std::optional<Millis> source_ready_at() const = 0;
    /// Called once when the stream finishes for any reason other than source end.
    virtual void stop_source() {}

    Clock& clock_;

private:
    CompletionChunk finalize(FinishReason reason, std::string text);

    std::vector<std::string> stops_;
    std::optional<Millis> deadline_;
    CancelHandle cancel_;
    std::string pending_;
    std::string emitted_;
    std::optional<FinishReason> finish_;
    std::optional<std::int64_t> usage_tokens_;
};

struct CompletionResult {
    std::string text;
    FinishReason finish;
    std::optional<std::int64_t> usage_tokens;

    std::int64_t token_count() const { return usage_tokens.value_or(approx_token_count(text)); }
};

class CompletionBackend {
public:
    virtual ~CompletionBackend() = default;

    /// Throws BackendUnreachable / BackendError.
    virtual std::unique_ptr<CompletionStream> complete_streaming(const CompletionRequest& request) = 0;

    virtual Clock& clock() = 0;
};

/// Drives a stream to completion, sleeping on the backend's clock.
CompletionResult drain(CompletionStream& stream, Clock& clock);

CompletionResult complete_blocking(CompletionBackend& backend, const CompletionRequest& request);

/// Completes every request with at most `max_in_flight` streams open at
/// once. Results are in request order.
std::vector<CompletionResult> complete_batch(CompletionBackend& backend, const std::vector<CompletionRequest>& requests,
                                             std::size_t max_in_flight = 8);

/// Parses a yes/no verdict. `pattern`, when given, is an ECMAScript regex
/// whose first capture group holds yes|no; otherwise a "Judgement: X" line
/// wins, falling back to the leading word. Throws UnparseableVerdict.
bool parse_yes_no(std::string_view completion, const std::optional<std::string>& pattern = std::nullopt);

/// Completes `prompt` and parses the verdict.
bool judge_yes_no(CompletionBackend& backend, const std::string& prompt, const SamplingParams& params,
                  const std::optional<std::string>& pattern = std::nullopt);

} // namespace mathorch::backend
