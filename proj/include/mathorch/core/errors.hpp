// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mathorch {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// A JSONL record failed validation. `line` is 1-based; `field` names the
/// offending key ("<json>" when the line is not valid JSON at all).
class SchemaError : public Error {
public:
    SchemaError(std::size_t line, std::string field, const std::string& detail = {})
        : Error("schema error at line " + std::to_string(line) + ", field '" + field + "'" +
                (detail.empty() ? std::string{} : ": " + detail)),
          line_(line),
          field_(std::move(field)) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    std::size_t line_;
    std::string field_;
};

/// Thrown by record parsers; the JSONL reader attaches the line number.
class FieldError : public Error {
public:
    FieldError(std::string field, const std::string& detail)
        : Error("field '" + field + "': " + detail), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class InvalidRecord : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& detail)
        : Error("config error in '" + field + "': " + detail), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class BackendUnreachable : public Error {
public:
    using Error::Error;
};

class BackendError : public Error {
public:
    BackendError(int status, std::string body)
        : Error("backend returned status " + std::to_string(status) + ": " + body),
          status_(status),
          body_(std::move(body)) {}

    int status() const noexcept { return status_; }
    const std::string& body() const noexcept { return body_; }

private:
    int status_;
    std::string body_;
};

class UnparseableVerdict : public Error {
public:
    using Error::Error;
};

class SandboxUnavailable : public Error {
public:
    using Error::Error;
};

class InsufficientGenerations : public Error {
public:
    explicit InsufficientGenerations(std::string problem_id, std::size_t have = 0, std::size_t need = 0)
        : Error("problem '" + problem_id + "' has " + std::to_string(have) + " generations, " +
                std::to_string(need) + " required"),
          problem_id_(std::move(problem_id)) {}

    const std::string& problem_id() const noexcept { return problem_id_; }

private:
    std::string problem_id_;
};

} // namespace mathorch
