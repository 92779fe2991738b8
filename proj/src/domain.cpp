#include "negotiate/domain.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "negotiate/text.hpp"

namespace negotiate {

LabelSpace::LabelSpace(std::vector<std::string> labels) : labels_(std::move(labels)) {
    if (labels_.empty()) throw InvariantError("label space must not be empty");
    std::set<std::string> seen;
    for (const auto& l : labels_) {
        if (l.empty() || text::trim(l) != l || text::to_lower(l) != l)
            throw InvariantError("label '" + l + "' is not lowercase and trimmed");
        if (!seen.insert(l).second) throw InvariantError("duplicate label '" + l + "'");
    }
}

LabelSpace LabelSpace::binary() { return LabelSpace({"positive", "negative"}); }

LabelSpace LabelSpace::ternary() { return LabelSpace({"positive", "negative", "neutral"}); }

bool LabelSpace::contains(std::string_view label) const {
    return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
}

std::size_t LabelSpace::index_of(const Label& label) const {
    const auto it = std::find(labels_.begin(), labels_.end(), label.value);
    if (it == labels_.end()) throw NoMatchError("label '" + label.value + "' not in label space");
    return static_cast<std::size_t>(it - labels_.begin());
}

Label canonicalize_label(std::string_view raw, const LabelSpace& space) {
    std::string norm = text::to_lower(text::trim(raw));
    while (!norm.empty() && std::ispunct(static_cast<unsigned char>(norm.back()))) norm.pop_back();
    const std::string_view view = text::trim(norm);

    std::vector<std::string> hits;
    for (const auto& l : space.labels()) {
        if (text::find_word(view, l) != std::string_view::npos) hits.push_back(l);
    }
    if (hits.empty()) throw NoMatchError("'" + std::string(raw) + "' denotes no label in the space");
    if (hits.size() > 1)
        throw AmbiguousLabelError("'" + std::string(raw) + "' mentions several labels");
    return Label{hits.front()};
}

std::string_view to_string(Attitude a) noexcept { return a == Attitude::Yes ? "yes" : "no"; }

std::string_view to_string(Role r) noexcept {
    return r == Role::Generator ? "generator" : "discriminator";
}

DiscriminatorDemo::DiscriminatorDemo(std::string input, ReasoningSteps reasoning, Label decision,
                                     Attitude attitude, std::string explanation,
                                     Label disc_decision, bool require_explanation)
    : input_(std::move(input)),
      reasoning_(std::move(reasoning)),
      decision_(std::move(decision)),
      attitude_(attitude),
      explanation_(std::move(explanation)),
      disc_decision_(std::move(disc_decision)) {
    if (attitude_ == Attitude::Yes && disc_decision_ != decision_)
        throw InvariantError("assenting discriminator demo must repeat the generator decision");
    if (require_explanation && text::trim(explanation_).empty())
        throw InvariantError("discriminator demo needs a non-empty explanation");
}

const std::string& Turn::raw() const {
    return std::visit([](const auto& r) -> const std::string& { return r.raw; }, response);
}

const Label& Turn::decision() const {
    return std::visit([](const auto& r) -> const Label& { return r.decision; }, response);
}

NegotiationOutcome NegotiationOutcome::consensus(Label label, int turns) {
    if (turns < 1) throw InvariantError("a consensus needs at least one turn");
    return NegotiationOutcome{OutcomeKind::Consensus, std::move(label), turns};
}

NegotiationOutcome NegotiationOutcome::no_consensus(int turns) {
    if (turns < 0) throw InvariantError("negative turn count");  // 0: failed before the first answer
    return NegotiationOutcome{OutcomeKind::NoConsensus, std::nullopt, turns};
}

void NegotiationConfig::validate() const {
    if (max_turns < 1) throw ConfigError("max_turns must be >= 1");
    if (k_demos < 0) throw ConfigError("k_demos must be >= 0");
    if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
}

const Label& NegotiationTranscript::first_decision() const {
    if (turns.empty()) throw InvariantError("transcript has no turns");
    return turns.front().decision();
}

void validate_transcript(const NegotiationTranscript& t, int max_turns) {
    const auto fail = [&](const std::string& why) {
        throw InvariantError("transcript for '" + t.input.id + "': " + why);
    };
    if (t.turns.empty()) fail("no turns");
    for (std::size_t i = 0; i < t.turns.size(); ++i) {
        const Turn& turn = t.turns[i];
        const Role expected = i % 2 == 0 ? Role::Generator : Role::Discriminator;
        if (turn.index != static_cast<int>(i) + 1) fail("turn index out of sequence");
        if (turn.role != expected) fail("roles must alternate starting with the generator");
        const bool gen_variant = std::holds_alternative<GeneratorResponse>(turn.response);
        if (gen_variant != (turn.role == Role::Generator)) fail("response kind does not match role");
        const auto& owner = turn.role == Role::Generator ? t.gen_agent : t.disc_agent;
        if (turn.agent_id != owner) fail("turn agent does not hold that role");
    }
    const auto& o = t.outcome;
    if (o.turns_used != static_cast<int>(t.turns.size())) fail("turns_used disagrees with turn count");
    if (o.turns_used < 1 || o.turns_used > max_turns) fail("turns_used outside [1, max_turns]");
    if (o.is_consensus() != o.decision.has_value()) fail("decision presence disagrees with kind");
    if (!o.is_consensus()) {
        if (o.turns_used != max_turns) fail("no consensus before the turn limit");
        return;
    }
    const Turn& last = t.turns.back();
    if (last.decision() != *o.decision) fail("outcome decision differs from the last turn");
    if (t.turns.size() >= 2) {
        const Turn& prev = t.turns[t.turns.size() - 2];
        if (prev.decision() != last.decision()) fail("consensus without matching last decisions");
        if (last.role == Role::Discriminator &&
            std::get<DiscriminatorResponse>(last.response).attitude != Attitude::Yes)
            fail("consensus on a dissenting discriminator turn");
    }
}

std::string_view to_string(Provenance p) noexcept {
    switch (p) {
        case Provenance::Agreement: return "agreement";
        case Provenance::SingleConsensus: return "single_consensus";
        case Provenance::Vote: return "vote";
        case Provenance::Fallback: return "fallback";
    }
    return "fallback";
}

Provenance provenance_from_string(std::string_view s) {
    if (s == "agreement") return Provenance::Agreement;
    if (s == "single_consensus") return Provenance::SingleConsensus;
    if (s == "vote") return Provenance::Vote;
    if (s == "fallback") return Provenance::Fallback;
    throw InvariantError("unknown provenance '" + std::string(s) + "'");
}

int VoteTally::total() const {
    int n = 0;
    for (const auto& [label, c] : counts) n += c;
    return n;
}

int VoteTally::count(const Label& l) const {
    for (const auto& [label, c] : counts)
        if (label == l) return c;
    return 0;
}

}  // namespace negotiate
