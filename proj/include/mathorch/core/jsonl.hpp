// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "mathorch/core/errors.hpp"
#include "mathorch/core/types.hpp"

namespace mathorch {

/// Type tag binding a record type to its parser.
template <typename T>
struct JsonlSchema;

template <>
struct JsonlSchema<Problem> {
    static Problem parse(const json& j) { return problem_from_json(j); }
};
template <>
struct JsonlSchema<Solution> {
    static Solution parse(const json& j) { return solution_from_json(j); }
};
template <>
struct JsonlSchema<SelectionRecord> {
    static SelectionRecord parse(const json& j) { return selection_record_from_json(j); }
};
template <>
struct JsonlSchema<json> {
    static json parse(const json& j) { return j; }
};

/// Streams parsed JSON objects from a JSONL file; blank lines are skipped.
class JsonlLineReader {
public:
    explicit JsonlLineReader(const std::filesystem::path& path);

    /// Next object with its 1-based line number, or nullopt at EOF.
    /// Throws SchemaError(line, "<json>") on malformed JSON.
    std::optional<std::pair<std::size_t, json>> next();

private:
    std::ifstream in_;
    std::size_t line_no_ = 0;
};

template <typename T>
class JsonlReader {
public:
    explicit JsonlReader(const std::filesystem::path& path) : lines_(path) {}

    std::optional<T> next() {
        auto item = lines_.next();
        if (!item) {
            return std::nullopt;
        }
        try {
            T record = JsonlSchema<T>::parse(item->second);
            if constexpr (std::is_same_v<T, Problem>) {
                if (!seen_ids_.insert(record.id).second) {
                    throw SchemaError(item->first, "id", "duplicate id '" + record.id + "'");
                }
            }
            return record;
        } catch (const FieldError& e) {
            throw SchemaError(item->first, e.field(), e.what());
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError(item->first, "<json>", e.what());
        }
    }

private:
    JsonlLineReader lines_;
    std::unordered_set<std::string> seen_ids_;
};

template <typename T>
std::vector<T> read_jsonl(const std::filesystem::path& path) {
    JsonlReader<T> reader(path);
    std::vector<T> out;
    while (auto r = reader.next()) {
        out.push_back(std::move(*r));
    }
    return out;
}

/// Appends or truncates; every record becomes one compact JSON line.
class JsonlWriter {
public:
    explicit JsonlWriter(const std::filesystem::path& path, bool append = false);

    void write(const json& j);
    void flush() { out_.flush(); }
    std::size_t count() const noexcept { return count_; }

private:
    std::ofstream out_;
    std::filesystem::path path_;
    std::size_t count_ = 0;
};

template <typename T>
std::size_t write_jsonl(const std::vector<T>& records, const std::filesystem::path& path) {
    JsonlWriter w(path);
    for (const auto& r : records) {
        if constexpr (std::is_same_v<T, json>) {
            w.write(r);
        } else {
            w.write(to_json(r));
        }
    }
    return w.count();
}

} // namespace mathorch
