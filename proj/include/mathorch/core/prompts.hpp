// SPDX-License-Identifier: Apache-2.0
//
// Prompt templates keyed by id. Placeholders use {{name}} so LaTeX braces in
// the template text need no escaping. Built-in defaults can be overridden
// by `<id>.txt` files in a template directory.

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace mathorch {

class PromptTemplates {
public:
    /// Built-in defaults.
    PromptTemplates();

    /// Defaults, then every `<id>.txt` found in `dir` replaces its entry.
    static PromptTemplates from_directory(const std::filesystem::path& dir);

    bool has(const std::string& id) const { return templates_.count(id) != 0; }
    const std::string& get(const std::string& id) const;
    void set(const std::string& id, std::string text) { templates_[id] = std::move(text); }
    std::vector<std::string> ids() const;

    /// Substitutes every {{key}}. Throws ConfigError for unknown ids or
    /// placeholders without a value.
    std::string render(const std::string& id, const std::map<std::string, std::string>& vars) const;

    static std::string substitute(const std::string& text, const std::map<std::string, std::string>& vars);

private:
    std::map<std::string, std::string> templates_;
};

/// Shared default instance.
const PromptTemplates& default_templates();

} // namespace mathorch
