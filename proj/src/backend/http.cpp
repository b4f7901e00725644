// SPDX-License-Identifier: Apache-2.0
#include "mathorch/backend/http.hpp"

#include <condition_variable>
#include <deque>
#include <exception>
#include <mutex>
#include <thread>

#include "httplib.h"
#include "mathorch/core/errors.hpp"

namespace mathorch::backend {
namespace {

class HttpStream final : public CompletionStream {
public:
    HttpStream(Clock& clock, const HttpBackendConfig& cfg, const CompletionRequest& req)
        : CompletionStream(clock, req.params.stop_sequences, req.deadline),
          client_(cfg.base_url) {
        client_.set_connection_timeout(cfg.connect_timeout_s, 0);
        client_.set_read_timeout(cfg.read_timeout_s, 0);

        httplib::Request http_req;
        http_req.method = "POST";
        http_req.path = "/v1/completions";
        http_req.body = completion_request_body(req, cfg.model).dump();
        http_req.set_header("Content-Type", "application/json");
        http_req.set_header("Accept", "text/event-stream");
        if (!cfg.api_key.empty()) {
            http_req.set_header("Authorization", "Bearer " + cfg.api_key);
        }
        http_req.response_handler = [this](const httplib::Response& res) {
            status_ = res.status;
            return !stopped_.load();
        };
        http_req.content_receiver = [this](const char* data, size_t len, uint64_t, uint64_t) {
            if (stopped_.load()) {
                return false;
            }
            if (status_ != 200) {
                error_body_.append(data, len);
                return true;
            }
            consume(std::string_view(data, len));
            return !stopped_.load();
        };
        worker_ = std::thread([this, r = std::move(http_req)]() mutable { run(std::move(r)); });
    }

    ~HttpStream() override {
        stopped_ = true;
        client_.stop();
        if (worker_.joinable()) {
            worker_.join();
        }
    }

    void wait_for_data(Millis max_wait) override {
        std::unique_lock lock(mutex_);
        cv_.wait_for(lock, max_wait, [this] { return !queue_.empty() || error_ || done_; });
    }

protected:
    std::optional<RawPiece> poll_source(Millis) override {
        std::lock_guard lock(mutex_);
        if (!queue_.empty()) {
            auto p = std::move(queue_.front());
            queue_.pop_front();
            return p;
        }
        if (error_) {
            std::rethrow_exception(std::exchange(error_, nullptr));
        }
        return std::nullopt;
    }

    std::optional<Millis> source_ready_at() const override {
        std::lock_guard lock(mutex_);
        if (!queue_.empty() || error_) {
            return clock_.now();
        }
        return std::nullopt;
    }

    void stop_source() override {
        stopped_ = true;
        client_.stop();
    }

private:
    void run(httplib::Request req) {
        auto res = client_.send(req);
        std::lock_guard lock(mutex_);
        if (!stopped_) {
            if (!res && status_ == 0) {
                error_ = std::make_exception_ptr(
                    BackendUnreachable("cannot reach completion backend: " + httplib::to_string(res.error())));
            } else if (status_ != 200) {
                error_ = std::make_exception_ptr(BackendError(status_, error_body_));
            } else if (!saw_end_) {
                // Stream closed without [DONE]; treat as a normal end.
                queue_.push_back(RawPiece{"", true, false, std::nullopt});
            }
        }
        done_ = true;
        cv_.notify_all();
    }

    void consume(std::string_view data) {
        buffer_.append(data);
        std::size_t pos;
        while ((pos = buffer_.find('\n')) != std::string::npos) {
            std::string line = buffer_.substr(0, pos);
            buffer_.erase(0, pos + 1);
            if (!line.empty() && line.back() == '\r') {
                line.pop_back();
            }
            if (line.rfind("data:", 0) != 0) {
                continue;
            }
            std::string_view payload(line);
            payload.remove_prefix(5);
            while (!payload.empty() && payload.front() == ' ') {
                payload.remove_prefix(1);
            }
            std::optional<RawPiece> piece;
            try {
                piece = parse_sse_payload(payload);
            } catch (const std::exception& e) {
                std::lock_guard lock(mutex_);
                error_ = std::make_exception_ptr(BackendError(200, std::string("malformed event: ") + e.what()));
                stopped_ = true;
                cv_.notify_all();
                return;
            }
            std::lock_guard lock(mutex_);
            if (!piece) {
                piece = RawPiece{"", true, false, std::nullopt};
            }
            if (saw_end_) {
                // A finish_reason already ended the choice; fold later usage in.
                if (piece->usage_tokens && !queue_.empty()) {
                    queue_.back().usage_tokens = piece->usage_tokens;
                }
                continue;
            }
            saw_end_ = piece->end;
            queue_.push_back(std::move(*piece));
            cv_.notify_all();
        }
    }

    httplib::Client client_;
    std::thread worker_;
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<RawPiece> queue_;
    std::exception_ptr error_;
    std::atomic<bool> stopped_{false};
    bool done_ = false;
    bool saw_end_ = false;
    int status_ = 0;
    std::string error_body_;
    std::string buffer_;
};

} // namespace

std::optional<RawPiece> parse_sse_payload(std::string_view payload) {
    if (payload == "[DONE]") {
        return std::nullopt;
    }
    const auto j = json::parse(payload);
    RawPiece piece;
    if (auto ch = j.find("choices"); ch != j.end() && ch->is_array() && !ch->empty()) {
        const auto& c = ch->front();
        if (auto t = c.find("text"); t != c.end() && t->is_string()) {
            piece.text = t->get<std::string>();
        }
        if (auto f = c.find("finish_reason"); f != c.end() && f->is_string()) {
            piece.end = true;
            piece.length_limit = f->get<std::string>() == "length";
        }
    }
    if (auto u = j.find("usage"); u != j.end() && u->is_object()) {
        if (auto ct = u->find("completion_tokens"); ct != u->end() && ct->is_number_integer()) {
            piece.usage_tokens = ct->get<std::int64_t>();
        }
    }
    return piece;
}

json completion_request_body(const CompletionRequest& request, const std::string& model) {
    json body{{"model", model},
              {"prompt", request.prompt},
              {"temperature", request.params.temperature},
              {"top_p", request.params.top_p},
              {"max_tokens", request.params.max_tokens},
              {"stop", request.params.stop_sequences},
              {"stream", true}};
    if (request.params.seed) {
        body["seed"] = *request.params.seed;
    }
    return body;
}

HttpBackend::HttpBackend(Clock& clock, HttpBackendConfig config) : clock_(clock), config_(std::move(config)) {
    if (config_.base_url.empty()) {
        throw ConfigError("backend.base_url", "required for http backends");
    }
}

std::unique_ptr<CompletionStream> HttpBackend::complete_streaming(const CompletionRequest& request) {
    if (request.prompt.empty()) {
        throw BackendError(400, "prompt must be non-empty");
    }
    return std::make_unique<HttpStream>(clock_, config_, request);
}

} // namespace mathorch::backend
