#include "negotiate/prompting.hpp"

#include <array>
#include <cctype>
#include <fstream>
#include <regex>
#include <sstream>

#include "negotiate/text.hpp"

namespace negotiate {

namespace {

constexpr std::array<std::string_view, 4> kPlaceholders = {"{{task}}", "{{demos}}", "{{input}}",
                                                           "{{last_response}}"};

constexpr std::string_view kDefaultSkeleton = "{{task}}\n\n{{demos}}\n\n{{input}}\n\n{{last_response}}\n";

constexpr std::string_view kReconsiderLine =
    "Reconsider the test input in light of this response and answer again in the same format.";

const std::regex& decision_regex() {
    static const std::regex re(R"(the\s+input\s+contains\s+(?:an?\s+)?([a-z_]+)\s+sentiment)",
                               std::regex::icase);
    return re;
}

const std::regex& step_regex() {
    static const std::regex re(R"(step\s*\d+\s*:)", std::regex::icase);
    return re;
}

std::string join_labels(const LabelSpace& space) {
    std::string out;
    for (const auto& l : space.labels()) {
        if (!out.empty()) out += ", ";
        out += l;
    }
    return out;
}

std::string input_block(const std::string& text, const std::optional<std::string>& topic,
                        std::string_view text_header) {
    std::string out;
    if (topic) out += std::string(kTopicHeader) + *topic + "\n";
    out += std::string(text_header) + text;
    return out;
}

/// With reasoning disabled, embedded responses are cut at the rationale
/// delimiter so that no rationale reaches the next prompt.
std::string embed_response(const std::string& raw, bool reasoning_enabled) {
    if (reasoning_enabled) return raw;
    const auto pos = text::ifind(raw, kRationaleDelimiter);
    if (pos == std::string::npos) return raw;
    return std::string(text::trim(std::string_view(raw).substr(0, pos)));
}

void check_demo_label(const Label& l, const LabelSpace& space) {
    if (!space.contains(l)) throw InvalidDemoError("demo decision '" + l.value + "' is outside the label space");
}

void check_demo_reasoning(const ReasoningSteps& steps, bool reasoning_enabled) {
    if (!reasoning_enabled && !steps.empty())
        throw InvalidDemoError("demo carries reasoning while reasoning is disabled");
}

std::string substitute(std::string line, const std::array<std::string, 4>& sections) {
    for (std::size_t i = 0; i < kPlaceholders.size(); ++i) {
        for (auto pos = line.find(kPlaceholders[i]); pos != std::string::npos;
             pos = line.find(kPlaceholders[i], pos + sections[i].size())) {
            line.replace(pos, kPlaceholders[i].size(), sections[i]);
        }
    }
    return line;
}

std::string assemble(std::string_view skeleton, const std::array<std::string, 4>& sections) {
    std::string out;
    bool drop_blank = false;
    for (const auto& line : text::split(skeleton, '\n')) {
        const auto bare = text::trim(line);
        if (drop_blank && bare.empty()) {
            drop_blank = false;
            continue;
        }
        drop_blank = false;
        bool empty_section = false;
        for (std::size_t i = 0; i < kPlaceholders.size(); ++i) {
            if (bare == kPlaceholders[i] && sections[i].empty()) empty_section = true;
        }
        if (empty_section) {
            drop_blank = true;
            continue;
        }
        out += substitute(line, sections);
        out += '\n';
    }
    while (!out.empty() && std::isspace(static_cast<unsigned char>(out.back()))) out.pop_back();
    return out;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ConfigError("cannot read template " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void validate_skeleton(std::string_view name, std::string_view skeleton) {
    std::size_t last = 0;
    bool seen_any = false;
    for (const auto ph : kPlaceholders) {
        const auto pos = skeleton.find(ph);
        if (pos == std::string_view::npos) {
            if (ph == "{{input}}") throw ConfigError(std::string(name) + " template lacks {{input}}");
            continue;
        }
        if (skeleton.find(ph, pos + 1) != std::string_view::npos)
            throw ConfigError(std::string(name) + " template repeats " + std::string(ph));
        if (seen_any && pos < last)
            throw ConfigError(std::string(name) + " template places " + std::string(ph) + " out of order");
        last = pos;
        seen_any = true;
    }
}

std::string generator_format_line(bool reasoning_enabled) {
    if (reasoning_enabled)
        return "Response format: begin with \"The input contains <label> sentiment.\" where <label> is one "
               "of the labels, then write \"Rationale:\" followed by numbered steps \"Step 1: ...\", "
               "\"Step 2: ...\".";
    return "Response format: reply with \"The input contains <label> sentiment.\" where <label> is one of "
           "the labels, and output only the decision.";
}

std::string discriminator_format_line(bool reasoning_enabled) {
    if (reasoning_enabled)
        return "Response format: begin with \"Yes.\" if the generator's decision is correct or \"No.\" if "
               "it is not, then explain why. When answering \"No.\", finish with \"The input contains "
               "<label> sentiment.\" naming the correct label.";
    return "Response format: reply \"Yes.\" if the generator's decision is correct; otherwise reply \"No. "
           "The input contains <label> sentiment.\" naming the correct label. Output only the decision.";
}

std::string task_section(const std::string& description, const LabelSpace& space, std::string format_line) {
    return "Task: " + description + "\nLabels: " + join_labels(space) + "\n" + format_line;
}

std::string after_line_prefix(std::string_view prompt, std::string_view prefix) {
    const auto pos = prompt.find(prefix);
    if (pos == std::string_view::npos) return {};
    const auto start = pos + prefix.size();
    const auto end = prompt.find('\n', start);
    return std::string(prompt.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
}

std::size_t earliest(std::string_view hay, std::size_t from, std::initializer_list<std::string> needles) {
    std::size_t best = hay.size();
    for (const auto& n : needles) {
        const auto pos = hay.find(n, from);
        if (pos != std::string_view::npos && pos < best) best = pos;
    }
    return best;
}

}  // namespace

std::string decision_statement(const Label& label) {
    return std::string(kDecisionPrefix) + label.value + std::string(kDecisionSuffix);
}

std::string format_generator_response(const Label& decision, const ReasoningSteps& reasoning) {
    std::string out = decision_statement(decision);
    if (reasoning.empty()) return out;
    out += " ";
    out += kRationaleDelimiter;
    for (std::size_t i = 0; i < reasoning.size(); ++i)
        out += " Step " + std::to_string(i + 1) + ": " + reasoning[i];
    return out;
}

PromptTemplates PromptTemplates::defaults() {
    return PromptTemplates{std::string(kDefaultSkeleton), std::string(kDefaultSkeleton)};
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& dir) {
    PromptTemplates t{read_file(dir / "generator.txt"), read_file(dir / "discriminator.txt")};
    t.validate();
    return t;
}

void PromptTemplates::validate() const {
    validate_skeleton("generator", generator);
    validate_skeleton("discriminator", discriminator);
}

std::string render_generator_prompt(const NegotiationConfig& config, const LabelSpace& space,
                                    const std::vector<GeneratorDemo>& demos, const Example& input,
                                    const DiscriminatorResponse* last, const PromptTemplates& templates) {
    std::array<std::string, 4> sections;
    sections[0] = task_section(config.task_description_gen, space, generator_format_line(config.reasoning_enabled));
    if (!demos.empty()) {
        std::string block = "Demonstrations:";
        for (const auto& d : demos) {
            check_demo_label(d.decision, space);
            check_demo_reasoning(d.reasoning, config.reasoning_enabled);
            block += "\n\nInput: " + d.input + "\nResponse: " + format_generator_response(d.decision, d.reasoning);
        }
        sections[1] = std::move(block);
    }
    sections[2] = input_block(input.text, input.topic, kTestInputHeader);
    if (last) {
        sections[3] = std::string(kDiscriminatorResponseHeader) + "\n" +
                      embed_response(last->raw, config.reasoning_enabled) + "\n\n" + std::string(kReconsiderLine);
    }
    return assemble(templates.generator, sections);
}

std::string render_discriminator_prompt(const NegotiationConfig& config, const LabelSpace& space,
                                        const std::vector<DiscriminatorDemo>& demos, const Example& input,
                                        const GeneratorResponse& gen_response, const PromptTemplates& templates) {
    if (!space.contains(gen_response.decision))
        throw InvalidDemoError("generator decision '" + gen_response.decision.value + "' is outside the label space");
    std::array<std::string, 4> sections;
    sections[0] = task_section(config.task_description_disc, space,
                               discriminator_format_line(config.reasoning_enabled));
    if (!demos.empty()) {
        std::string block = "Demonstrations:";
        for (const auto& d : demos) {
            check_demo_label(d.decision(), space);
            check_demo_label(d.disc_decision(), space);
            check_demo_reasoning(d.reasoning(), config.reasoning_enabled);
            std::string verdict = d.attitude() == Attitude::Yes ? "Yes." : "No.";
            if (config.reasoning_enabled && !d.explanation().empty()) verdict += " " + d.explanation();
            if (d.attitude() == Attitude::No) verdict += " " + decision_statement(d.disc_decision());
            block += "\n\nInput: " + d.input() +
                     "\nGenerator response: " + format_generator_response(d.decision(), d.reasoning()) +
                     "\nDiscriminator response: " + verdict;
        }
        sections[1] = std::move(block);
    }
    sections[2] = input_block(input.text, input.topic, kTestInputHeader);
    sections[3] = std::string(kGeneratorResponseHeader) + "\n" + embed_response(gen_response.raw, config.reasoning_enabled);
    return assemble(templates.discriminator, sections);
}

std::string generator_format_reminder(const LabelSpace& space, bool reasoning_enabled) {
    return "\n\n" + std::string(kReminderHeader) + " your previous answer could not be read. Labels: " +
           join_labels(space) + ". " + generator_format_line(reasoning_enabled);
}

std::string discriminator_format_reminder(const LabelSpace& space, bool reasoning_enabled) {
    return "\n\n" + std::string(kReminderHeader) + " your previous answer could not be read. Labels: " +
           join_labels(space) + ". " + discriminator_format_line(reasoning_enabled);
}

ReasoningSteps parse_reasoning_steps(std::string_view raw, bool require_markers) {
    const auto delim = text::ifind(raw, kRationaleDelimiter);
    std::string_view body;
    if (delim != std::string::npos) {
        body = raw.substr(delim + kRationaleDelimiter.size());
    } else if (require_markers) {
        body = raw;
    } else {
        return {};
    }

    const std::string s(body);
    ReasoningSteps steps;
    auto it = std::sregex_iterator(s.begin(), s.end(), step_regex());
    const auto end = std::sregex_iterator();
    if (it == end) {
        if (require_markers) return {};
        const auto whole = text::trim(s);
        if (!whole.empty()) steps.emplace_back(whole);
        return steps;
    }
    std::vector<std::pair<std::size_t, std::size_t>> marks;  // (start of marker, end of marker)
    for (; it != end; ++it)
        marks.emplace_back(static_cast<std::size_t>(it->position()),
                           static_cast<std::size_t>(it->position() + it->length()));
    for (std::size_t i = 0; i < marks.size(); ++i) {
        const auto from = marks[i].second;
        const auto to = i + 1 < marks.size() ? marks[i + 1].first : s.size();
        const auto step = text::trim(std::string_view(s).substr(from, to - from));
        if (!step.empty()) steps.emplace_back(step);
    }
    return steps;
}

GeneratorResponse parse_generator_response(std::string_view raw, const LabelSpace& space) {
    const std::string s(raw);
    std::smatch m;
    if (!std::regex_search(s, m, decision_regex()))
        throw NoDecisionError("no decision statement in generator response");
    Label decision;
    try {
        decision = canonicalize_label(m[1].str(), space);
    } catch (const LabelError& e) {
        throw NoDecisionError(std::string("generator decision not in label space: ") + e.what());
    }
    return GeneratorResponse{std::move(decision), parse_reasoning_steps(raw), s};
}

DiscriminatorResponse parse_discriminator_response(std::string_view raw, const LabelSpace& space,
                                                   const Label& gen_decision) {
    std::size_t i = 0;
    while (i < raw.size() && !std::isalpha(static_cast<unsigned char>(raw[i]))) ++i;
    std::size_t j = i;
    while (j < raw.size() && std::isalpha(static_cast<unsigned char>(raw[j]))) ++j;
    const auto token = text::to_lower(raw.substr(i, j - i));
    if (token != "yes" && token != "no") throw NoAttitudeError("discriminator response does not lead with yes/no");

    std::string_view rest = raw.substr(j);
    while (!rest.empty() && (std::ispunct(static_cast<unsigned char>(rest.front())) ||
                             std::isspace(static_cast<unsigned char>(rest.front()))))
        rest.remove_prefix(1);

    DiscriminatorResponse out;
    out.raw = std::string(raw);
    out.explanation = std::string(text::trim(rest));
    if (token == "yes") {
        out.attitude = Attitude::Yes;
        out.decision = gen_decision;
        return out;
    }
    out.attitude = Attitude::No;
    const std::string s(raw);
    std::smatch m;
    if (!std::regex_search(s, m, decision_regex()))
        throw NoDecisionError("dissenting discriminator response names no decision");
    try {
        out.decision = canonicalize_label(m[1].str(), space);
    } catch (const LabelError& e) {
        throw NoDecisionError(std::string("discriminator decision not in label space: ") + e.what());
    }
    return out;
}

std::string render_reasoning_prompt(const std::string& input, const std::optional<std::string>& topic,
                                    const Label& gold) {
    return "Task: Explain step by step why the input below contains " + gold.value +
           " sentiment.\nResponse format: write \"Rationale:\" followed by numbered steps \"Step 1: ...\", "
           "\"Step 2: ...\".\n\n" +
           input_block(input, topic, "Input: ");
}

std::string render_explanation_prompt(const GeneratorDemo& demo) {
    return "Task: Explain why the decision below is correct for the input.\nResponse format: begin with "
           "\"Yes.\" and then give the explanation in one or two sentences.\n\nInput: " +
           demo.input + "\nGenerator response: " + format_generator_response(demo.decision, demo.reasoning);
}

PromptFacts inspect_prompt(std::string_view prompt) {
    PromptFacts f;
    f.is_reprompt = prompt.find("\n\n" + std::string(kReminderHeader)) != std::string_view::npos;
    const auto labels = after_line_prefix(prompt, "Labels: ");
    if (!labels.empty()) {
        for (auto& l : text::split(labels, ',')) f.labels.emplace_back(text::trim(l));
    }

    static const std::regex target(R"(contains (\S+) sentiment)");
    std::match_results<std::string_view::const_iterator> m;

    if (prompt.rfind("Task: Explain step by step why", 0) == 0 ||
        prompt.rfind("Task: Explain why the decision", 0) == 0) {
        f.kind = prompt.rfind("Task: Explain step by step why", 0) == 0 ? PromptFacts::Kind::Reasoning
                                                                         : PromptFacts::Kind::Explanation;
        f.reasoning_enabled = true;
        const auto start = prompt.find("\nInput: ");
        if (start != std::string_view::npos) {
            const auto from = start + 8;
            const auto stop = earliest(prompt, from, {"\nGenerator response: "});
            f.input = std::string(prompt.substr(from, stop - from));
        }
        std::string_view hay = prompt.substr(0, prompt.find('\n'));
        if (f.kind == PromptFacts::Kind::Explanation) {
            const auto g = prompt.find("\nGenerator response: ");
            hay = g == std::string_view::npos ? std::string_view{} : prompt.substr(g);
        }
        if (std::regex_search(hay.begin(), hay.end(), m, target)) f.target_label = m[1].str();
        return f;
    }

    f.reasoning_enabled = after_line_prefix(prompt, "Response format: ").find(kRationaleDelimiter) != std::string::npos;

    const auto gen_hdr = prompt.find(kGeneratorResponseHeader);
    f.kind = gen_hdr != std::string_view::npos ? PromptFacts::Kind::Discriminator : PromptFacts::Kind::Generator;

    const std::string input_marker = "\n" + std::string(kTestInputHeader);
    auto in_pos = prompt.rfind(input_marker);
    std::size_t from = 0;
    if (in_pos != std::string_view::npos) {
        from = in_pos + input_marker.size();
    } else if (prompt.rfind(kTestInputHeader, 0) == 0) {
        from = kTestInputHeader.size();
    }
    const auto stop = earliest(prompt, from,
                               {"\n\n" + std::string(kGeneratorResponseHeader),
                                "\n\n" + std::string(kDiscriminatorResponseHeader), "\n\n" + std::string(kReminderHeader)});
    f.input = std::string(prompt.substr(from, stop - from));

    const std::string_view header =
        f.kind == PromptFacts::Kind::Discriminator ? kGeneratorResponseHeader : kDiscriminatorResponseHeader;
    const auto hdr = prompt.find(header);
    if (hdr != std::string_view::npos) {
        const auto body = hdr + header.size() + 1;
        const auto end = earliest(prompt, body,
                                  {"\n\n" + std::string(kReconsiderLine), "\n\n" + std::string(kReminderHeader)});
        f.embedded_response = std::string(prompt.substr(std::min(body, prompt.size()), end - std::min(body, end)));
    }
    return f;
}

}  // namespace negotiate
