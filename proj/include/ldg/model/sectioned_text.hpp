#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ldg::model {

struct Entry
{
    std::string key;
    std::string value;
    std::size_t line = 0;
};

/// One `[name attr=value ...]` block followed by `key=value` entries.
struct Section
{
    std::string name;
    std::map<std::string, std::string> attributes;
    std::vector<Entry> entries;
    std::size_t line = 0;

    const Entry* find(std::string_view key) const;
    std::optional<std::string> get(std::string_view key) const;
    std::string get_or(std::string_view key, const std::string& fallback) const;
};

/// Line-oriented `[section]` / `key=value` dialect shared by model and run files.
/// Several pairs may share a line; a value runs until the next `name=`.
/// `#` starts a comment. Throws ParseError carrying the 1-based line number.
struct SectionedText
{
    std::vector<Section> sections;

    const Section* find(std::string_view name) const;
    std::vector<const Section*> find_all(std::string_view name) const;
};

SectionedText parse_sectioned_text(std::string_view text);
SectionedText read_sectioned_file(const std::filesystem::path& path);
std::string to_string(const SectionedText& text);

/// Split "k1=v1 k2=a + b" into pairs.
std::vector<std::pair<std::string, std::string>> split_pairs(std::string_view line);

} // namespace ldg::model
