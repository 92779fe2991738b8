#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "negotiate/domain.hpp"

namespace negotiate {

// Response grammar. Matching is case-insensitive.
inline constexpr std::string_view kRationaleDelimiter = "Rationale:";
inline constexpr std::string_view kDecisionPrefix = "The input contains ";
inline constexpr std::string_view kDecisionSuffix = " sentiment.";

// Section headers written by the renderers.
inline constexpr std::string_view kTestInputHeader = "Test input: ";
inline constexpr std::string_view kTopicHeader = "Topic: ";
inline constexpr std::string_view kGeneratorResponseHeader = "Response from the generator:";
inline constexpr std::string_view kDiscriminatorResponseHeader =
    "Response from the discriminator in the last turn:";
inline constexpr std::string_view kReminderHeader = "Reminder:";

/// "The input contains <label> sentiment."
std::string decision_statement(const Label& label);

/// Canonical text of a generator answer under the grammar; the inverse of
/// parse_generator_response for well-formed steps.
std::string format_generator_response(const Label& decision, const ReasoningSteps& reasoning);

/// Prompt skeletons, one per role. Each holds the placeholders {{task}},
/// {{demos}}, {{input}} and {{last_response}} in that order ({{input}} is
/// mandatory). A line holding only a placeholder whose section is empty is
/// dropped together with the blank line after it.
struct PromptTemplates {
    std::string generator;
    std::string discriminator;

    static PromptTemplates defaults();
    /// Reads generator.txt and discriminator.txt from `dir`. Throws ConfigError
    /// when a file is missing or misorders its placeholders.
    static PromptTemplates load(const std::filesystem::path& dir);
    /// Throws ConfigError when a skeleton is not well formed.
    void validate() const;
};

std::string render_generator_prompt(const NegotiationConfig& config, const LabelSpace& space,
                                    const std::vector<GeneratorDemo>& demos, const Example& input,
                                    const DiscriminatorResponse* last,
                                    const PromptTemplates& templates = PromptTemplates::defaults());

std::string render_discriminator_prompt(const NegotiationConfig& config, const LabelSpace& space,
                                        const std::vector<DiscriminatorDemo>& demos,
                                        const Example& input, const GeneratorResponse& gen_response,
                                        const PromptTemplates& templates = PromptTemplates::defaults());

/// Appended to a prompt for the single re-ask after an unparseable answer.
std::string generator_format_reminder(const LabelSpace& space, bool reasoning_enabled);
std::string discriminator_format_reminder(const LabelSpace& space, bool reasoning_enabled);

/// Throws NoDecisionError when no decision statement is found or its label is
/// outside `space`.
GeneratorResponse parse_generator_response(std::string_view raw, const LabelSpace& space);

/// Throws NoAttitudeError when the text does not lead with yes/no, and
/// NoDecisionError when a dissent carries no parseable decision.
DiscriminatorResponse parse_discriminator_response(std::string_view raw, const LabelSpace& space,
                                                   const Label& gen_decision);

/// Steps delimited by "Step <n>:" after the rationale delimiter. When
/// `require_markers` is false, rationale text without step markers becomes a
/// single step; when true (and no delimiter is present), the whole text is
/// scanned for markers and none yields an empty list.
ReasoningSteps parse_reasoning_steps(std::string_view raw, bool require_markers = false);

// Zero-shot prompts used to augment retrieved demonstrations.
std::string render_reasoning_prompt(const std::string& input, const std::optional<std::string>& topic,
                                    const Label& gold);
std::string render_explanation_prompt(const GeneratorDemo& demo);

/// Structural facts recovered from a prompt this module rendered. Used by
/// rule-based stand-in agents and by tests.
struct PromptFacts {
    enum class Kind { Generator, Discriminator, Reasoning, Explanation };
    Kind kind = Kind::Generator;
    std::string input;
    std::vector<std::string> labels;
    bool reasoning_enabled = false;
    /// Generator prompts: the discriminator's last response; discriminator
    /// prompts: the generator response under evaluation.
    std::optional<std::string> embedded_response;
    /// Reasoning and explanation prompts: the label being justified.
    std::optional<std::string> target_label;
    bool is_reprompt = false;
};

PromptFacts inspect_prompt(std::string_view prompt);

}  // namespace negotiate
