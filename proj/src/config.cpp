#include "negotiate/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "negotiate/text.hpp"

namespace negotiate {

using nlohmann::json;

// ---- TOML subset ------------------------------------------------------------

namespace {

void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

bool is_bare_key_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

class TomlParser {
public:
    explicit TomlParser(std::string_view src) : src_(src) {}

    json parse() {
        json root = json::object();
        json* current = &root;
        for (;;) {
            skip_blank_lines();
            if (at_end()) break;
            if (peek() == '[') {
                current = &header(root);
            } else {
                key_value(*current);
            }
            end_of_line();
        }
        return root;
    }

private:
    std::string_view src_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::set<std::string> defined_tables_;

    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError("line " + std::to_string(line_) + ": " + what);
    }

    bool at_end() const { return pos_ >= src_.size(); }
    char peek(std::size_t ahead = 0) const { return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0'; }
    bool starts_with(std::string_view s) const { return src_.substr(pos_, s.size()) == s; }

    char get() {
        const char c = src_[pos_++];
        if (c == '\n') ++line_;
        return c;
    }

    void skip_spaces() {
        while (!at_end() && (peek() == ' ' || peek() == '\t')) ++pos_;
    }

    void skip_comment() {
        if (peek() == '#')
            while (!at_end() && peek() != '\n') ++pos_;
    }

    // whitespace, comments and newlines (inside arrays and between statements)
    void skip_blank_lines() {
        for (;;) {
            skip_spaces();
            skip_comment();
            if (!at_end() && (peek() == '\n' || peek() == '\r')) {
                get();
                continue;
            }
            return;
        }
    }

    void end_of_line() {
        skip_spaces();
        skip_comment();
        if (at_end()) return;
        if (peek() == '\r') ++pos_;
        if (at_end()) return;
        if (peek() != '\n') fail("unexpected text after value");
        get();
    }

    std::string key_part() {
        skip_spaces();
        if (peek() == '"') return basic_string();
        if (peek() == '\'') return literal_string();
        std::string k;
        while (!at_end() && is_bare_key_char(peek())) k += src_[pos_++];
        if (k.empty()) fail("expected a key");
        return k;
    }

    std::vector<std::string> key_path() {
        std::vector<std::string> parts{key_part()};
        skip_spaces();
        while (peek() == '.') {
            ++pos_;
            parts.push_back(key_part());
            skip_spaces();
        }
        return parts;
    }

    static std::string joined(const std::vector<std::string>& path) {
        std::string s;
        for (const auto& p : path) s += (s.empty() ? "" : ".") + p;
        return s;
    }

    // Walk to (and create) the table at `path`; arrays of tables resolve to their last element.
    json& descend(json& root, const std::vector<std::string>& path, std::size_t count) {
        json* node = &root;
        for (std::size_t i = 0; i < count; ++i) {
            json& next = (*node)[path[i]];
            if (next.is_null()) next = json::object();
            if (next.is_array()) {
                if (next.empty() || !next.back().is_object()) fail("'" + path[i] + "' is not a table");
                node = &next.back();
            } else if (next.is_object()) {
                node = &next;
            } else {
                fail("'" + path[i] + "' is not a table");
            }
        }
        return *node;
    }

    json& header(json& root) {
        ++pos_;
        const bool array = peek() == '[';
        if (array) ++pos_;
        const auto path = key_path();
        if (peek() != ']' || (array && peek(1) != ']')) fail("unterminated table header");
        pos_ += array ? 2 : 1;

        json& parent = descend(root, path, path.size() - 1);
        json& slot = parent[path.back()];
        if (array) {
            if (slot.is_null()) slot = json::array();
            if (!slot.is_array()) fail("'" + joined(path) + "' is already defined as a table");
            slot.push_back(json::object());
            return slot.back();
        }
        if (!defined_tables_.insert(joined(path)).second) fail("table [" + joined(path) + "] defined twice");
        if (slot.is_null()) slot = json::object();
        if (!slot.is_object()) fail("'" + joined(path) + "' is not a table");
        return slot;
    }

    void key_value(json& table) {
        const auto path = key_path();
        skip_spaces();
        if (peek() != '=') fail("expected '=' after key '" + joined(path) + "'");
        ++pos_;
        skip_spaces();
        json value = parse_value();
        json& parent = descend(table, path, path.size() - 1);
        if (parent.contains(path.back())) fail("duplicate key '" + joined(path) + "'");
        parent[path.back()] = std::move(value);
    }

    json parse_value() {
        if (at_end()) fail("expected a value");
        const char c = peek();
        if (starts_with("\"\"\"")) return multiline_basic();
        if (starts_with("'''")) return multiline_literal();
        if (c == '"') return basic_string();
        if (c == '\'') return literal_string();
        if (c == '[') return array();
        if (c == '{') return inline_table();
        if (starts_with("true")) {
            pos_ += 4;
            return true;
        }
        if (starts_with("false")) {
            pos_ += 5;
            return false;
        }
        if (c == '+' || c == '-' || std::isdigit(static_cast<unsigned char>(c))) return number();
        fail("unsupported value");
    }

    void escape(std::string& out) {
        if (at_end()) fail("unterminated escape");
        const char e = get();
        switch (e) {
            case 'b': out += '\b'; return;
            case 't': out += '\t'; return;
            case 'n': out += '\n'; return;
            case 'f': out += '\f'; return;
            case 'r': out += '\r'; return;
            case '"': out += '"'; return;
            case '\\': out += '\\'; return;
            case 'u':
            case 'U': {
                const std::size_t n = e == 'u' ? 4 : 8;
                if (pos_ + n > src_.size()) fail("truncated unicode escape");
                std::uint32_t cp = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    const char h = src_[pos_++];
                    if (!std::isxdigit(static_cast<unsigned char>(h))) fail("bad unicode escape");
                    cp = cp * 16 + static_cast<std::uint32_t>(std::stoi(std::string(1, h), nullptr, 16));
                }
                append_utf8(out, cp);
                return;
            }
            default: fail(std::string("unknown escape \\") + e);
        }
    }

    std::string basic_string() {
        ++pos_;
        std::string out;
        for (;;) {
            if (at_end() || peek() == '\n') fail("unterminated string");
            const char c = get();
            if (c == '"') return out;
            if (c == '\\')
                escape(out);
            else
                out += c;
        }
    }

    std::string literal_string() {
        ++pos_;
        std::string out;
        for (;;) {
            if (at_end() || peek() == '\n') fail("unterminated string");
            const char c = get();
            if (c == '\'') return out;
            out += c;
        }
    }

    void skip_first_newline() {
        if (starts_with("\r\n")) {
            pos_ += 1;
            get();
        } else if (peek() == '\n') {
            get();
        }
    }

    std::string multiline_basic() {
        pos_ += 3;
        skip_first_newline();
        std::string out;
        for (;;) {
            if (at_end()) fail("unterminated multi-line string");
            if (starts_with("\"\"\"")) {
                pos_ += 3;
                return out;
            }
            const char c = get();
            if (c != '\\') {
                out += c;
                continue;
            }
            // line-ending backslash swallows the newline and leading whitespace
            std::size_t look = pos_;
            while (look < src_.size() && (src_[look] == ' ' || src_[look] == '\t')) ++look;
            if (look < src_.size() && (src_[look] == '\n' || src_[look] == '\r')) {
                pos_ = look;
                while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) get();
                continue;
            }
            escape(out);
        }
    }

    std::string multiline_literal() {
        pos_ += 3;
        skip_first_newline();
        std::string out;
        for (;;) {
            if (at_end()) fail("unterminated multi-line string");
            if (starts_with("'''")) {
                pos_ += 3;
                return out;
            }
            out += get();
        }
    }

    json array() {
        ++pos_;
        const auto opened = line_;
        json out = json::array();
        for (;;) {
            skip_blank_lines();
            if (at_end()) {
                line_ = opened;
                fail("unterminated array");
            }
            if (peek() == ']') {
                ++pos_;
                return out;
            }
            out.push_back(parse_value());
            skip_blank_lines();
            if (at_end()) {
                line_ = opened;
                fail("unterminated array");
            }
            if (peek() == ',') {
                ++pos_;
            } else if (peek() != ']') {
                fail("expected ',' or ']' in array");
            }
        }
    }

    json inline_table() {
        ++pos_;
        json out = json::object();
        skip_spaces();
        if (peek() == '}') {
            ++pos_;
            return out;
        }
        for (;;) {
            key_value(out);
            skip_spaces();
            if (peek() == ',') {
                ++pos_;
                continue;
            }
            if (peek() == '}') {
                ++pos_;
                return out;
            }
            fail("expected ',' or '}' in inline table");
        }
    }

    json number() {
        std::string tok;
        while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' || peek() == '-' ||
                             peek() == '.' || peek() == '_'))
            tok += src_[pos_++];
        std::string digits;
        for (const char c : tok)
            if (c != '_') digits += c;
        const bool is_float = digits.find_first_of(".eE") != std::string::npos;
        try {
            std::size_t used = 0;
            if (is_float) {
                const double v = std::stod(digits, &used);
                if (used == digits.size()) return v;
            } else {
                const long long v = std::stoll(digits, &used);
                if (used == digits.size()) return v;
            }
        } catch (const std::exception&) {
        }
        fail("invalid number '" + tok + "'");
    }
};

}  // namespace

json parse_toml(std::string_view source) { return TomlParser(source).parse(); }

// ---- RunConfig --------------------------------------------------------------

namespace {

// Typed access to one TOML table, rejecting unknown keys.
class Section {
public:
    Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw ConfigError(where_ + " must be a table");
    }

    void allow(std::initializer_list<std::string_view> keys) const {
        for (const auto& [k, _] : j_.items())
            if (std::find(keys.begin(), keys.end(), k) == keys.end())
                throw ConfigError("unknown key '" + k + "' in " + where_);
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    std::string string(const std::string& key) const {
        const auto& v = need(key);
        if (!v.is_string()) throw type_error(key, "a string");
        return v.get<std::string>();
    }

    long long integer(const std::string& key) const {
        const auto& v = need(key);
        if (!v.is_number_integer()) throw type_error(key, "an integer");
        return v.get<long long>();
    }

    double real(const std::string& key) const {
        const auto& v = need(key);
        if (!v.is_number()) throw type_error(key, "a number");
        return v.get<double>();
    }

    bool boolean(const std::string& key) const {
        const auto& v = need(key);
        if (!v.is_boolean()) throw type_error(key, "a boolean");
        return v.get<bool>();
    }

    std::vector<std::string> strings(const std::string& key) const {
        const auto& v = need(key);
        if (!v.is_array()) throw type_error(key, "an array of strings");
        std::vector<std::string> out;
        for (const auto& e : v) {
            if (!e.is_string()) throw type_error(key, "an array of strings");
            out.push_back(e.get<std::string>());
        }
        return out;
    }

    const json& need(const std::string& key) const {
        if (!j_.contains(key)) throw ConfigError("missing key '" + key + "' in " + where_);
        return j_.at(key);
    }

    const std::string& where() const { return where_; }

private:
    const json& j_;
    std::string where_;

    ConfigError type_error(const std::string& key, const char* expected) const {
        return ConfigError("'" + key + "' in " + where_ + " must be " + expected);
    }
};

std::size_t non_negative(long long v, const std::string& key) {
    if (v < 0) throw ConfigError("'" + key + "' must not be negative");
    return static_cast<std::size_t>(v);
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return (path.is_absolute() || base.empty() ? path : base / path).lexically_normal();
}

AgentKind agent_kind_from_string(const std::string& s) {
    if (s == "openai") return AgentKind::OpenAi;
    if (s == "scripted") return AgentKind::Scripted;
    if (s == "lexicon") return AgentKind::Lexicon;
    throw ConfigError("unknown agent kind '" + s + "' (expected openai, scripted or lexicon)");
}

std::string_view to_string(AgentKind k) {
    switch (k) {
        case AgentKind::OpenAi: return "openai";
        case AgentKind::Scripted: return "scripted";
        case AgentKind::Lexicon: return "lexicon";
    }
    return "openai";
}

AgentConfig agent_from(const json& j, std::size_t index) {
    const Section s(j, "[[agents]] #" + std::to_string(index + 1));
    s.allow({"id", "kind", "model", "base_url", "max_output_tokens", "script", "positive_words", "negative_words",
             "conviction"});
    AgentConfig a;
    a.id = s.string("id");
    if (s.has("kind")) a.kind = agent_kind_from_string(s.string("kind"));
    if (s.has("model")) a.model = s.string("model");
    if (s.has("base_url")) a.base_url = s.string("base_url");
    if (s.has("max_output_tokens")) a.max_output_tokens = static_cast<int>(s.integer("max_output_tokens"));
    if (s.has("script")) a.script = s.strings("script");
    if (s.has("positive_words")) a.lexicon.positive_words = s.strings("positive_words");
    if (s.has("negative_words")) a.lexicon.negative_words = s.strings("negative_words");
    if (s.has("conviction")) a.lexicon.conviction = static_cast<int>(s.integer("conviction"));
    if (a.model.empty()) a.model = a.kind == AgentKind::OpenAi ? "" : std::string(to_string(a.kind));
    return a;
}

DatasetConfig dataset_from(const json& j, std::size_t index, const std::filesystem::path& base) {
    const Section s(j, "[[datasets]] #" + std::to_string(index + 1));
    s.allow({"name", "path", "train", "format", "label_map"});
    DatasetConfig d;
    d.name = s.string("name");
    d.path = resolve(base, s.string("path"));
    if (s.has("train")) d.train = resolve(base, s.string("train"));
    if (s.has("format")) d.format = dataset_format_from_string(s.string("format"));
    if (s.has("label_map")) {
        const Section m(s.need("label_map"), s.where() + " label_map");
        for (const auto& [raw, _] : s.need("label_map").items()) d.label_map[raw] = m.string(raw);
    }
    return d;
}

}  // namespace

DatasetSpec DatasetConfig::spec() const {
    auto s = DatasetSpec::builtin(name, path, format);
    for (const auto& [raw, label] : label_map) s.label_map[raw] = label;
    return s;
}

std::optional<DatasetSpec> DatasetConfig::train_spec() const {
    if (!train) return std::nullopt;
    auto s = spec();
    s.path = *train;
    return s;
}

RunConfig run_config_from_json(const json& doc, const std::filesystem::path& base_dir) {
    const Section top(doc, "the top level");
    top.allow({"mode", "participants", "out", "cache_dir", "concurrency", "limit", "seed", "templates",
               "max_features", "negotiation", "agents", "datasets"});
    RunConfig c;
    if (top.has("mode")) c.mode = mode_from_string(top.string("mode"));
    if (top.has("participants")) c.participants = top.strings("participants");
    if (top.has("out")) c.out = resolve(base_dir, top.string("out"));
    if (top.has("cache_dir")) c.cache_dir = resolve(base_dir, top.string("cache_dir"));
    if (top.has("concurrency")) c.concurrency = non_negative(top.integer("concurrency"), "concurrency");
    if (top.has("limit")) c.limit = non_negative(top.integer("limit"), "limit");
    if (top.has("seed")) c.seed = non_negative(top.integer("seed"), "seed");
    if (top.has("templates")) c.templates = resolve(base_dir, top.string("templates"));
    if (top.has("max_features")) c.max_features = non_negative(top.integer("max_features"), "max_features");

    if (top.has("negotiation")) {
        const Section n(top.need("negotiation"), "[negotiation]");
        n.allow({"max_turns", "k", "reasoning", "temperature", "task_generator", "task_discriminator"});
        auto& cfg = c.negotiation;
        if (n.has("max_turns")) cfg.max_turns = static_cast<int>(n.integer("max_turns"));
        if (n.has("k")) cfg.k_demos = static_cast<int>(n.integer("k"));
        if (n.has("reasoning")) cfg.reasoning_enabled = n.boolean("reasoning");
        if (n.has("temperature")) cfg.temperature = n.real("temperature");
        if (n.has("task_generator")) cfg.task_description_gen = n.string("task_generator");
        if (n.has("task_discriminator")) cfg.task_description_disc = n.string("task_discriminator");
    }
    if (top.has("agents")) {
        const auto& list = top.need("agents");
        if (!list.is_array()) throw ConfigError("'agents' must be an array of tables ([[agents]])");
        for (std::size_t i = 0; i < list.size(); ++i) c.agents.push_back(agent_from(list[i], i));
    }
    if (top.has("datasets")) {
        const auto& list = top.need("datasets");
        if (!list.is_array()) throw ConfigError("'datasets' must be an array of tables ([[datasets]])");
        for (std::size_t i = 0; i < list.size(); ++i) c.datasets.push_back(dataset_from(list[i], i, base_dir));
    }
    return c;
}

void RunConfig::validate() const {
    if (agents.empty()) throw ConfigError("no agents configured");
    std::set<std::string> ids;
    for (const auto& a : agents) {
        if (a.id.empty()) throw ConfigError("agent id must not be empty");
        if (!ids.insert(a.id).second) throw ConfigError("duplicate agent id '" + a.id + "'");
        if (a.kind == AgentKind::OpenAi && a.model.empty()) throw ConfigError("agent '" + a.id + "' needs a model");
        if (a.max_output_tokens <= 0) throw ConfigError("agent '" + a.id + "': max_output_tokens must be positive");
    }
    for (const auto& p : participants)
        if (!ids.count(p)) throw ConfigError("participant '" + p + "' is not a configured agent");
    pipeline().validate();
    negotiation.validate();
    if (concurrency == 0) throw ConfigError("concurrency must be at least 1");
    if (datasets.empty()) throw ConfigError("no datasets configured");
    std::set<std::string> names;
    for (const auto& d : datasets) {
        if (!is_known_dataset(d.name)) throw ConfigError("unknown dataset '" + d.name + "'");
        if (!names.insert(d.name).second) throw ConfigError("dataset '" + d.name + "' listed twice");
        const auto space = d.spec().label_space;
        for (const auto& [raw, label] : d.label_map)
            if (!space.contains(Label{label}))
                throw ConfigError("dataset '" + d.name + "': label_map sends '" + raw + "' to unknown label '" +
                                  label + "'");
    }
}

json RunConfig::snapshot() const {
    json agents_j = json::array();
    for (const auto& a : agents)
        agents_j.push_back({{"id", a.id},
                            {"kind", to_string(a.kind)},
                            {"model", a.model},
                            {"base_url", a.kind == AgentKind::OpenAi ? json(a.base_url) : json(nullptr)},
                            {"max_output_tokens", a.max_output_tokens}});
    json datasets_j = json::array();
    for (const auto& d : datasets)
        datasets_j.push_back({{"name", d.name},
                              {"path", d.path.string()},
                              {"train", d.train ? json(d.train->string()) : json(nullptr)},
                              {"format", to_string(d.format)}});
    return {{"mode", to_string(mode)},
            {"participants", participants},
            {"concurrency", concurrency},
            {"limit", limit ? json(*limit) : json(nullptr)},
            {"seed", seed},
            {"templates", templates ? json(templates->string()) : json(nullptr)},
            {"max_features", max_features},
            {"negotiation",
             {{"max_turns", negotiation.max_turns},
              {"k", negotiation.k_demos},
              {"reasoning", negotiation.reasoning_enabled},
              {"temperature", negotiation.temperature},
              {"task_generator", negotiation.task_description_gen},
              {"task_discriminator", negotiation.task_description_disc}}},
            {"agents", std::move(agents_j)},
            {"datasets", std::move(datasets_j)}};
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    json doc;
    try {
        doc = parse_toml(buf.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    auto c = run_config_from_json(doc, path.parent_path());
    c.validate();
    return c;
}

AgentDirectory build_agents(const RunConfig& config, const BackendFactoryOptions& options) {
    AgentDirectory dir;
    for (const auto& a : config.agents) {
        std::shared_ptr<AgentBackend> backend;
        switch (a.kind) {
            case AgentKind::OpenAi: {
                HttpBackendOptions http;
                http.base_url = a.base_url;
                if (options.api_key) http.api_key = *options.api_key;
                if (options.sleep) http.sleep = options.sleep;
                backend = std::make_shared<HttpBackend>(std::move(http));
                if (config.cache_dir) backend = std::make_shared<CachedBackend>(*config.cache_dir, backend);
                break;
            }
            case AgentKind::Scripted: {
                auto scripted = std::make_shared<ScriptedBackend>();
                scripted->push_all(a.id, a.script);
                backend = std::move(scripted);
                break;
            }
            case AgentKind::Lexicon: backend = std::make_shared<LexiconBackend>(a.lexicon); break;
        }
        dir.add(AgentHandle{a.id, a.model, a.max_output_tokens, std::move(backend)});
    }
    return dir;
}

}  // namespace negotiate
