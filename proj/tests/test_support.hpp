// SPDX-License-Identifier: Apache-2.0
//
// Helpers shared by the unit and acceptance tests.

#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include "mathorch/backend/scripted.hpp"
#include "mathorch/core/types.hpp"

namespace mathorch::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> serial{0};
        path_ = std::filesystem::temp_directory_path() /
                ("mathorch-test-" + std::to_string(::getpid()) + "-" + std::to_string(serial++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// A loopback port with nothing listening on it: bound once, then released.
inline int unused_port() {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
    socklen_t len = sizeof addr;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    ::close(fd);
    return ntohs(addr.sin_port);
}

inline std::filesystem::path data_dir() { return MATHORCH_TEST_DATA; }

inline backend::ScriptedBehavior behavior(backend::PromptMatcher matcher,
                                          std::vector<std::vector<backend::ScriptSegment>> turns) {
    return backend::ScriptedBehavior{std::move(matcher), std::move(turns)};
}

/// Single-turn behavior answering every prompt with `text` after `delay_ms`.
inline backend::ScriptedBehavior reply(std::string text, std::int64_t delay_ms = 0,
                                       backend::PromptMatcher matcher = backend::PromptMatcher::any()) {
    return behavior(std::move(matcher), {{{std::move(text), delay_ms}}});
}

inline Problem make_problem(std::string id, std::string statement, std::optional<std::string> expected = {}) {
    Problem p;
    p.id = std::move(id);
    p.statement = std::move(statement);
    if (expected) {
        p.expected_answer = std::move(expected);
        p.answer_source = AnswerSource::human;
    }
    return p;
}

} // namespace mathorch::testing
