// SPDX-License-Identifier: Apache-2.0
#include "mathorch/core/jsonl.hpp"

namespace mathorch {

JsonlLineReader::JsonlLineReader(const std::filesystem::path& path) : in_(path) {
    if (!in_) {
        throw IoError("cannot open '" + path.string() + "' for reading");
    }
}

std::optional<std::pair<std::size_t, json>> JsonlLineReader::next() {
    std::string line;
    while (std::getline(in_, line)) {
        ++line_no_;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw SchemaError(line_no_, "<json>", "not a JSON object");
        }
        return std::make_pair(line_no_, std::move(j));
    }
    if (in_.bad()) {
        throw IoError("read failure");
    }
    return std::nullopt;
}

JsonlWriter::JsonlWriter(const std::filesystem::path& path, bool append)
    : out_(path, append ? std::ios::app : std::ios::trunc), path_(path) {
    if (!out_) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
}

void JsonlWriter::write(const json& j) {
    out_ << j.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
    if (!out_) {
        throw IoError("write to '" + path_.string() + "' failed");
    }
    ++count_;
}

} // namespace mathorch
