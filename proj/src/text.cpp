#include "negotiate/text.hpp"

#include <algorithm>
#include <cctype>

namespace negotiate::text {

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string_view trim(std::string_view s) {
    const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

bool is_word_char(char c) noexcept {
    const auto u = static_cast<unsigned char>(c);
    return std::isalnum(u) != 0 || c == '_';
}

std::size_t find_word(std::string_view haystack, std::string_view needle, std::size_t from) {
    if (needle.empty()) return std::string_view::npos;
    for (auto pos = haystack.find(needle, from); pos != std::string_view::npos;
         pos = haystack.find(needle, pos + 1)) {
        const bool left_ok = pos == 0 || !is_word_char(haystack[pos - 1]);
        const auto end = pos + needle.size();
        const bool right_ok = end == haystack.size() || !is_word_char(haystack[end]);
        if (left_ok && right_ok) return pos;
    }
    return std::string_view::npos;
}

std::size_t ifind(std::string_view haystack, std::string_view needle, std::size_t from) {
    if (needle.size() > haystack.size()) return std::string_view::npos;
    const auto lower_h = to_lower(haystack);
    const auto lower_n = to_lower(needle);
    return lower_h.find(lower_n, from);
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(s.substr(start));
            return out;
        }
        out.emplace_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

std::string one_line(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool last_space = false;
    for (char c : s) {
        if (c == '\t' || c == '\n' || c == '\r') {
            if (!last_space) out.push_back(' ');
            last_space = true;
        } else {
            out.push_back(c);
            last_space = false;
        }
    }
    return out;
}

CsvDocument parse_csv(std::string_view data) {
    CsvDocument doc;
    std::size_t line = 1;
    std::size_t i = 0;
    while (i < data.size()) {
        CsvRecord rec{line, std::vector<std::string>(1)};
        bool in_quotes = false;
        while (i < data.size()) {
            const char c = data[i];
            if (in_quotes) {
                if (c == '"') {
                    if (i + 1 < data.size() && data[i + 1] == '"') {
                        rec.fields.back() += '"';
                        i += 2;
                        continue;
                    }
                    in_quotes = false;
                } else {
                    if (c == '\n') ++line;
                    rec.fields.back() += c;
                }
                ++i;
                continue;
            }
            ++i;
            if (c == '"' && rec.fields.back().empty()) {
                in_quotes = true;
            } else if (c == ',') {
                rec.fields.emplace_back();
            } else if (c == '\n') {
                ++line;
                break;
            } else if (c != '\r') {
                rec.fields.back() += c;
            }
        }
        if (in_quotes) {
            doc.unterminated_line = rec.line;
            break;
        }
        if (rec.fields.size() == 1 && trim(rec.fields[0]).empty()) continue;
        doc.records.push_back(std::move(rec));
    }
    return doc;
}

}  // namespace negotiate::text
