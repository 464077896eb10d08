#include "ldg/model/sectioned_text.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "ldg/error.hpp"

namespace ldg::model {

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return s;
}

bool is_ident(char c)
{
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

} // namespace

const Entry* Section::find(std::string_view key) const
{
    for (const auto& e : entries)
        if (e.key == key)
            return &e;
    return nullptr;
}

std::optional<std::string> Section::get(std::string_view key) const
{
    if (const auto* e = find(key))
        return e->value;
    if (auto it = attributes.find(std::string(key)); it != attributes.end())
        return it->second;
    return std::nullopt;
}

std::string Section::get_or(std::string_view key, const std::string& fallback) const
{
    return get(key).value_or(fallback);
}

const Section* SectionedText::find(std::string_view name) const
{
    for (const auto& s : sections)
        if (s.name == name)
            return &s;
    return nullptr;
}

std::vector<const Section*> SectionedText::find_all(std::string_view name) const
{
    std::vector<const Section*> out;
    for (const auto& s : sections)
        if (s.name == name)
            out.push_back(&s);
    return out;
}

std::vector<std::pair<std::string, std::string>> split_pairs(std::string_view line)
{
    // locate every `ident=` whose identifier starts a token
    std::vector<std::pair<std::size_t, std::size_t>> keys; // (key begin, '=' position)
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] != '=')
            continue;
        std::size_t end = i;
        while (end > 0 && std::isspace(static_cast<unsigned char>(line[end - 1])))
            --end;
        std::size_t begin = end;
        while (begin > 0 && is_ident(line[begin - 1]))
            --begin;
        if (begin == end)
            throw ParseError("missing key before '='", i);
        if (begin > 0 && !std::isspace(static_cast<unsigned char>(line[begin - 1])))
            throw ParseError("malformed key before '='", begin);
        keys.emplace_back(begin, i);
    }
    if (keys.empty()) {
        if (!trim(line).empty())
            throw ParseError("expected key=value", 0);
        return {};
    }
    if (!trim(line.substr(0, keys.front().first)).empty())
        throw ParseError("unexpected text before first key", 0);

    std::vector<std::pair<std::string, std::string>> pairs;
    for (std::size_t k = 0; k < keys.size(); ++k) {
        const auto [begin, eq] = keys[k];
        const std::size_t value_end = k + 1 < keys.size() ? keys[k + 1].first : line.size();
        const auto key = trim(line.substr(begin, eq - begin));
        const auto value = trim(line.substr(eq + 1, value_end - eq - 1));
        pairs.emplace_back(std::string(key), std::string(value));
    }
    return pairs;
}

SectionedText parse_sectioned_text(std::string_view text)
{
    SectionedText out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string_view raw = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        if (const auto hash = raw.find('#'); hash != std::string_view::npos)
            raw = raw.substr(0, hash);
        const auto line = trim(raw);
        if (line.empty())
            continue;

        try {
            if (line.front() == '[') {
                const auto close = line.find(']');
                if (close == std::string_view::npos)
                    throw ParseError("unterminated section header", 0);
                const auto inner = trim(line.substr(1, close - 1));
                std::size_t n = 0;
                while (n < inner.size() && is_ident(inner[n]))
                    ++n;
                if (n == 0)
                    throw ParseError("missing section name", 1);
                Section sec;
                sec.name = std::string(inner.substr(0, n));
                sec.line = line_no;
                for (auto& [k, v] : split_pairs(inner.substr(n)))
                    sec.attributes[k] = v;
                // `[name] key=value ...` puts entries on the header line
                for (auto& [k, v] : split_pairs(line.substr(close + 1)))
                    sec.entries.push_back(Entry{k, v, line_no});
                out.sections.push_back(std::move(sec));
                continue;
            }
            if (out.sections.empty())
                throw ParseError("entry outside of any section", 0);
            for (auto& [k, v] : split_pairs(line))
                out.sections.back().entries.push_back(Entry{k, v, line_no});
        } catch (const ParseError& e) {
            throw ParseError(e.detail() + " on line " + std::to_string(line_no), line_no);
        }
    }
    return out;
}

SectionedText read_sectioned_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_sectioned_text(ss.str());
}

std::string to_string(const SectionedText& text)
{
    std::ostringstream os;
    bool first = true;
    for (const auto& sec : text.sections) {
        if (!first)
            os << '\n';
        first = false;
        os << '[' << sec.name;
        for (const auto& [k, v] : sec.attributes)
            os << ' ' << k << '=' << v;
        os << "]\n";
        for (const auto& e : sec.entries)
            os << e.key << '=' << e.value << '\n';
    }
    return os.str();
}

} // namespace ldg::model
