#include "negotiate/lexicon_backend.hpp"

#include <cstdlib>

#include "negotiate/prompting.hpp"
#include "negotiate/text.hpp"

namespace negotiate {

namespace {

std::vector<std::string> words_of(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (const char c : s) {
        if (text::is_word_char(c) || c == '\'') {
            cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

LabelSpace space_of(const PromptFacts& f) {
    if (f.labels.empty()) return LabelSpace::binary();
    try {
        return LabelSpace(f.labels);
    } catch (const InvariantError&) {
        return LabelSpace::binary();
    }
}

Label label_for(int score, const LabelSpace& space) {
    const Label pos{"positive"}, neg{"negative"}, neu{"neutral"};
    if (score > 0 && space.contains(pos)) return pos;
    if (score < 0 && space.contains(neg)) return neg;
    if (space.contains(neu)) return neu;
    return space.at(0);
}

std::optional<Label> decision_in(const std::optional<std::string>& response, const LabelSpace& space) {
    if (!response) return std::nullopt;
    try {
        return parse_generator_response(*response, space).decision;
    } catch (const ResponseFormatError&) {
        return std::nullopt;
    }
}

}  // namespace

LexiconOptions LexiconOptions::defaults() {
    LexiconOptions o;
    o.positive_words = {"good",      "great",    "excellent", "love",   "loved",    "wonderful", "best",
                        "fun",       "enjoy",    "enjoyed",   "beautiful", "brilliant", "happy",  "amazing",
                        "perfect",   "delightful", "charming", "moving", "superb",   "recommend", "fantastic"};
    o.negative_words = {"bad",    "worst",   "awful",    "boring", "terrible",     "hate",     "hated",
                        "poor",   "dull",    "waste",    "stupid", "mess",         "disappointing", "horrible",
                        "fails",  "lame",    "weak",     "broken", "refund",       "annoying", "mediocre"};
    return o;
}

LexiconBackend::LexiconBackend(LexiconOptions options)
    : positive_(options.positive_words.begin(), options.positive_words.end()),
      negative_(options.negative_words.begin(), options.negative_words.end()),
      conviction_(options.conviction) {}

int LexiconBackend::score(std::string_view s) const {
    int total = 0;
    for (const auto& w : words_of(s)) {
        if (positive_.count(w)) ++total;
        if (negative_.count(w)) --total;
    }
    return total;
}

std::size_t LexiconBackend::calls() const {
    std::lock_guard lock(mu_);
    return calls_;
}

Completion LexiconBackend::complete(const CompletionRequest& req) {
    req.validate();
    {
        std::lock_guard lock(mu_);
        ++calls_;
    }
    const auto facts = inspect_prompt(req.prompt);
    const auto space = space_of(facts);
    const int s = score(facts.input);

    std::vector<std::string> cues;
    for (const auto& w : words_of(facts.input))
        if (positive_.count(w) || negative_.count(w)) cues.push_back(w);
    std::string cue_text;
    for (std::size_t i = 0; i < cues.size() && i < 3; ++i) cue_text += (i ? ", " : "") + cues[i];

    switch (facts.kind) {
        case PromptFacts::Kind::Reasoning: {
            const auto target = facts.target_label.value_or(label_for(s, space).value);
            const std::string first = cues.empty() ? "Step 1: The input has no strong sentiment words."
                                                   : "Step 1: The input uses the words " + cue_text + ".";
            return {first + " Step 2: Taken together the tone reads as " + target + ".", 0, false};
        }
        case PromptFacts::Kind::Explanation: {
            const auto target = facts.target_label.value_or(label_for(s, space).value);
            return {"Yes. The wording of the input fits " + target + " sentiment.", 0, false};
        }
        case PromptFacts::Kind::Generator: {
            Label own = label_for(s, space);
            if (const auto other = decision_in(facts.embedded_response, space);
                other && std::abs(s) < conviction_)
                own = *other;
            if (!facts.reasoning_enabled) return {decision_statement(own), 0, false};
            ReasoningSteps steps{cues.empty() ? "No cue word settles the tone." : "The input uses " + cue_text + ".",
                                 "The overall tone is " + own.value + "."};
            return {format_generator_response(own, steps), 0, false};
        }
        case PromptFacts::Kind::Discriminator: {
            const Label own = label_for(s, space);
            const auto proposed = decision_in(facts.embedded_response, space);
            if (!proposed || *proposed == own || std::abs(s) < conviction_) {
                return {facts.reasoning_enabled ? "Yes. The decision matches the cues in the input." : "Yes.", 0,
                        false};
            }
            const std::string why = facts.reasoning_enabled ? " The cues in the input point the other way." : "";
            return {"No." + why + " " + decision_statement(own), 0, false};
        }
    }
    return {decision_statement(label_for(s, space)), 0, false};
}

}  // namespace negotiate
