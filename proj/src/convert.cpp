#include "negotiate/convert.hpp"

#include <algorithm>
#include <fstream>
#include <optional>
#include <sstream>
#include <vector>

#include "negotiate/evaluation.hpp"
#include "negotiate/text.hpp"

namespace negotiate {

namespace {

struct Row {
    std::size_t line = 0;
    std::string text;
    std::string raw_label;
    std::optional<std::string> topic;
};

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot read " + p.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<std::string> lines_of(const std::string& data) {
    std::vector<std::string> out;
    std::istringstream in(data);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        out.push_back(std::move(line));
    }
    return out;
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
    for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size())
        s.replace(pos, from.size(), to);
    return s;
}

std::vector<Row> read_sst2(const std::filesystem::path& input) {
    std::vector<Row> rows;
    const auto lines = lines_of(read_file(input));
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (text::trim(lines[i]).empty()) continue;
        const auto cols = text::split(lines[i], '\t');
        if (i == 0 && text::to_lower(cols[0]) == "sentence") continue;
        rows.push_back({i + 1, cols[0], cols.size() > 1 ? cols[1] : "", std::nullopt});
    }
    return rows;
}

std::vector<Row> read_mr(const std::filesystem::path& dir) {
    std::vector<Row> rows;
    for (const auto& [file, label] : {std::pair{"rt-polarity.pos", "positive"}, std::pair{"rt-polarity.neg", "negative"}}) {
        const auto lines = lines_of(ensure_utf8(read_file(dir / file)));
        for (std::size_t i = 0; i < lines.size(); ++i) rows.push_back({i + 1, lines[i], label, std::nullopt});
    }
    return rows;
}

std::vector<Row> read_twitter(const std::filesystem::path& input) {
    std::vector<Row> rows;
    const auto lines = lines_of(read_file(input));
    for (std::size_t i = 0; i < lines.size(); ++i) {
        auto cols = text::split(lines[i], '\t');
        while (!cols.empty() && text::trim(cols.back()).empty()) cols.pop_back();
        if (cols.empty()) continue;
        Row r{i + 1, "", "", std::nullopt};
        if (cols.size() == 3) {
            r.raw_label = cols[1];
            r.text = cols[2];
        } else if (cols.size() >= 4) {
            r.topic = cols[1];
            r.raw_label = cols[2];
            for (std::size_t c = 3; c < cols.size(); ++c) r.text += (c > 3 ? " " : "") + cols[c];
        } else {
            r.raw_label = cols.size() > 1 ? cols[1] : "";
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

// The polarity dumps escape newlines as "\n" and quotes as "\"".
std::string unescape_polarity(std::string s) { return replace_all(replace_all(std::move(s), "\\n", " "), "\\\"", "\""); }

std::vector<Row> read_polarity_csv(const std::filesystem::path& input, bool with_title) {
    std::vector<Row> rows;
    const auto csv = text::parse_csv(read_file(input));
    if (csv.unterminated_line)
        throw DatasetError({{RowIssue::Kind::Parse, *csv.unterminated_line, std::nullopt, "", "unterminated quoted field"}});
    for (const auto& rec : csv.records) {
        const auto& f = rec.fields;
        Row r{rec.line, "", f[0], std::nullopt};
        if (with_title && f.size() >= 3) {
            std::string title(text::trim(unescape_polarity(f[1])));
            const std::string body = unescape_polarity(f[2]);
            if (!title.empty() && std::string_view(".!?").find(title.back()) == std::string_view::npos) title += ".";
            r.text = title.empty() ? body : title + " " + body;
        } else if (!with_title && f.size() >= 2) {
            r.text = unescape_polarity(f[1]);
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<Row> read_imdb(const std::filesystem::path& dir) {
    std::vector<Row> rows;
    for (const auto& [sub, label] : {std::pair{"pos", "positive"}, std::pair{"neg", "negative"}}) {
        const auto d = dir / sub;
        if (!std::filesystem::is_directory(d)) throw IoError("missing directory " + d.string());
        std::vector<std::filesystem::path> files;
        for (const auto& entry : std::filesystem::directory_iterator(d))
            if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (std::size_t i = 0; i < files.size(); ++i)
            rows.push_back({i + 1, replace_all(replace_all(read_file(files[i]), "<br /><br />", " "), "<br />", " "), label, std::nullopt});
    }
    return rows;
}

std::map<std::string, std::string> conversion_labels(const std::string& name) {
    if (name == "yelp2" || name == "amazon2") return {{"1", "negative"}, {"2", "positive"}};
    return DatasetSpec::builtin(name, {}).label_map;
}

bool valid_utf8(std::string_view s) {
    for (std::size_t i = 0; i < s.size();) {
        const auto c = static_cast<unsigned char>(s[i]);
        std::size_t n = 0;
        if (c < 0x80) n = 0;
        else if ((c >> 5) == 0x6) n = 1;
        else if ((c >> 4) == 0xE) n = 2;
        else if ((c >> 3) == 0x1E) n = 3;
        else return false;
        if (n > 0 && i + n >= s.size()) return false;
        for (std::size_t k = 1; k <= n; ++k)
            if ((static_cast<unsigned char>(s[i + k]) >> 6) != 0x2) return false;
        i += n + 1;
    }
    return true;
}

}  // namespace

std::string ensure_utf8(std::string_view s) {
    if (valid_utf8(s)) return std::string(s);
    std::string out;
    out.reserve(s.size() + s.size() / 8);
    for (const char ch : s) {
        const auto c = static_cast<unsigned char>(ch);
        if (c < 0x80) {
            out += ch;
        } else {
            out += static_cast<char>(0xC0 | (c >> 6));
            out += static_cast<char>(0x80 | (c & 0x3F));
        }
    }
    return out;
}

ConvertResult convert_dataset(const std::string& name, const std::filesystem::path& input,
                              const std::filesystem::path& output) {
    if (!is_known_dataset(name)) throw ConfigError("unknown dataset '" + name + "'");
    if (!std::filesystem::exists(input)) throw IoError("input " + input.string() + " does not exist");

    std::vector<Row> rows;
    if (name == "sst2") rows = read_sst2(input);
    else if (name == "mr") rows = read_mr(input);
    else if (name == "twitter") rows = read_twitter(input);
    else if (name == "yelp2") rows = read_polarity_csv(input, false);
    else if (name == "amazon2") rows = read_polarity_csv(input, true);
    else rows = read_imdb(input);

    const auto labels = conversion_labels(name);
    std::vector<RowIssue> issues;
    ConvertResult result;
    std::ostringstream body;
    bool any_topic = false;
    for (const auto& r : rows) any_topic = any_topic || r.topic.has_value();
    for (const auto& r : rows) {
        const std::string clean(text::trim(text::one_line(ensure_utf8(r.text))));
        if (clean.empty()) {
            ++result.skipped;
            continue;
        }
        const std::string raw(text::trim(r.raw_label));
        auto it = labels.find(raw);
        if (it == labels.end()) it = labels.find(text::to_lower(raw));
        if (it == labels.end()) {
            issues.push_back({RowIssue::Kind::UnknownLabel, r.line, std::nullopt, raw, "unknown label"});
            continue;
        }
        body << clean << '\t' << it->second;
        if (any_topic) body << '\t' << text::one_line(r.topic.value_or(""));
        body << '\n';
        ++result.rows;
    }
    if (!issues.empty()) throw DatasetError(std::move(issues));

    std::ofstream out(output, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + output.string());
    out << (any_topic ? "text\tlabel\ttopic\n" : "text\tlabel\n") << body.str();
    if (!out.flush()) throw IoError("cannot write " + output.string());
    return result;
}

}  // namespace negotiate
