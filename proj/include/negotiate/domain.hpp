#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "negotiate/errors.hpp"

namespace negotiate {

/// A canonical sentiment label: lowercase, trimmed English word.
struct Label {
    std::string value;

    friend auto operator<=>(const Label&, const Label&) = default;
    friend bool operator==(const Label&, const Label&) = default;
};

/// Ordered, non-empty set of canonical labels. The order is significant: it
/// is the final tie-break in voting and the column order of reports.
class LabelSpace {
public:
    explicit LabelSpace(std::vector<std::string> labels);

    static LabelSpace binary();   // [positive, negative]
    static LabelSpace ternary();  // [positive, negative, neutral]

    const std::vector<std::string>& labels() const noexcept { return labels_; }
    std::size_t size() const noexcept { return labels_.size(); }
    bool contains(std::string_view label) const;
    bool contains(const Label& label) const { return contains(label.value); }
    /// Position of `label` in the space; throws NoMatchError if absent.
    std::size_t index_of(const Label& label) const;
    Label at(std::size_t i) const { return Label{labels_.at(i)}; }

    friend bool operator==(const LabelSpace&, const LabelSpace&) = default;

private:
    std::vector<std::string> labels_;
};

/// Map free text onto the unique label it denotes. Lowercases, trims and
/// strips terminal punctuation, then looks for whole-word label occurrences.
/// Throws NoMatchError when none occurs and AmbiguousLabelError when more than
/// one distinct label occurs.
Label canonicalize_label(std::string_view text, const LabelSpace& space);

struct Example {
    std::string id;
    std::string text;
    std::optional<Label> gold;
    /// Target of the opinion, for topic-conditioned datasets (twitter).
    std::optional<std::string> topic;
};

using ReasoningSteps = std::vector<std::string>;

struct GeneratorDemo {
    std::string input;
    ReasoningSteps reasoning;
    Label decision;
};

enum class Attitude { Yes, No };

std::string_view to_string(Attitude a) noexcept;

/// Six-element discriminator demonstration. The constructor enforces that an
/// assenting attitude carries the generator's decision, and that the
/// explanation is present whenever reasoning is part of the prompt.
class DiscriminatorDemo {
public:
    DiscriminatorDemo(std::string input, ReasoningSteps reasoning, Label decision, Attitude attitude,
                      std::string explanation, Label disc_decision, bool require_explanation = true);

    const std::string& input() const noexcept { return input_; }
    const ReasoningSteps& reasoning() const noexcept { return reasoning_; }
    const Label& decision() const noexcept { return decision_; }
    Attitude attitude() const noexcept { return attitude_; }
    const std::string& explanation() const noexcept { return explanation_; }
    const Label& disc_decision() const noexcept { return disc_decision_; }

private:
    std::string input_;
    ReasoningSteps reasoning_;
    Label decision_;
    Attitude attitude_;
    std::string explanation_;
    Label disc_decision_;
};

struct GeneratorResponse {
    Label decision;
    ReasoningSteps reasoning;
    std::string raw;
};

struct DiscriminatorResponse {
    Attitude attitude = Attitude::No;
    std::string explanation;
    Label decision;
    std::string raw;
};

enum class Role { Generator, Discriminator };

std::string_view to_string(Role r) noexcept;

struct Turn {
    int index = 0;  // 1-based
    Role role = Role::Generator;
    std::string agent_id;
    std::string prompt;
    std::variant<GeneratorResponse, DiscriminatorResponse> response;

    const std::string& raw() const;
    const Label& decision() const;
};

enum class OutcomeKind { Consensus, NoConsensus };

struct NegotiationOutcome {
    OutcomeKind kind = OutcomeKind::NoConsensus;
    std::optional<Label> decision;
    int turns_used = 0;

    static NegotiationOutcome consensus(Label label, int turns);
    static NegotiationOutcome no_consensus(int turns);

    bool is_consensus() const noexcept { return kind == OutcomeKind::Consensus; }
    friend bool operator==(const NegotiationOutcome&, const NegotiationOutcome&) = default;
};

inline constexpr std::string_view kDefaultGeneratorTask =
    "Please determine the overall sentiment of test input.";
inline constexpr std::string_view kDefaultDiscriminatorTask =
    "Please determine whether the decision is correct.";

struct NegotiationConfig {
    int max_turns = 3;
    int k_demos = 5;
    bool reasoning_enabled = true;
    double temperature = 0.0;
    std::string task_description_gen{kDefaultGeneratorTask};
    std::string task_description_disc{kDefaultDiscriminatorTask};

    /// Throws ConfigError when a field is out of range.
    void validate() const;
};

struct NegotiationTranscript {
    Example input;
    std::string gen_agent;
    std::string disc_agent;
    std::vector<Turn> turns;
    NegotiationOutcome outcome;

    /// Decision of the opening generator turn.
    const Label& first_decision() const;
};

/// Checks the structural transcript invariants: non-empty, 1-based indices,
/// roles alternating from the generator, agent ids matching their roles,
/// outcome/turn-count agreement and consensus soundness. Throws InvariantError.
void validate_transcript(const NegotiationTranscript& t, int max_turns);

enum class Provenance { Agreement, SingleConsensus, Vote, Fallback };

std::string_view to_string(Provenance p) noexcept;
Provenance provenance_from_string(std::string_view s);

struct VoteTally {
    /// Counts in LabelSpace order; labels with no votes are kept with 0.
    std::vector<std::pair<Label, int>> counts;

    int total() const;
    int count(const Label& l) const;
};

struct SessionResult {
    Example input;
    NegotiationTranscript primary;
    std::optional<NegotiationTranscript> flipped;
    std::vector<NegotiationTranscript> arbitration;  // empty or exactly 4
    std::optional<VoteTally> tally;
    Label final;
    Provenance provenance = Provenance::SingleConsensus;
};

}  // namespace negotiate
