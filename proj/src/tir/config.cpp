// SPDX-License-Identifier: Apache-2.0
#include "mathorch/tir/config.hpp"

#include "mathorch/core/errors.hpp"

namespace mathorch::tir {

void validate(const TirConfig& c) {
    if (c.code_begin_tag.empty()) {
        throw ConfigError("tir.code_begin_tag", "must be non-empty");
    }
    if (c.code_end_tag.empty()) {
        throw ConfigError("tir.code_end_tag", "must be non-empty");
    }
    if (c.code_begin_tag == c.code_end_tag) {
        throw ConfigError("tir.code_end_tag", "must differ from code_begin_tag");
    }
    if (c.max_code_executions < 1) {
        throw ConfigError("tir.max_code_executions", "must be at least 1");
    }
    if (c.data_generation && c.max_code_executions > kMaxDataGenCodeExecutions) {
        throw ConfigError("tir.max_code_executions", "must be at most 8 for data generation");
    }
    if (c.output_char_cap < 1) {
        throw ConfigError("tir.output_char_cap", "must be positive");
    }
    if (c.exec_timeout_ms < 1) {
        throw ConfigError("tir.exec_timeout_ms", "must be positive");
    }
    try {
        validate(c.params);
    } catch (const FieldError& e) {
        throw ConfigError("tir.params." + e.field(), e.what());
    }
}

} // namespace mathorch::tir
