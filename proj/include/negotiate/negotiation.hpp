#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "negotiate/backend.hpp"
#include "negotiate/domain.hpp"
#include "negotiate/prompting.hpp"
#include "negotiate/retrieval.hpp"

namespace negotiate {

struct AgentPair {
    std::string generator;
    std::string discriminator;
};

/// Everything a negotiation needs besides its input and config.
struct NegotiationDeps {
    const AgentDirectory* agents = nullptr;
    LabelSpace space = LabelSpace::binary();
    PromptTemplates templates = PromptTemplates::defaults();
    /// Null means zero-shot prompts.
    const DemoSource* demos = nullptr;
};

/// A negotiation (or a pair of them) failed part-way. `transcripts` holds
/// whatever was produced, partial ones included.
class NegotiationError : public Error {
public:
    NegotiationError(const std::string& what, std::vector<NegotiationTranscript> transcripts, bool backend_failure)
        : Error(what), transcripts_(std::move(transcripts)), backend_failure_(backend_failure) {}

    const std::vector<NegotiationTranscript>& transcripts() const noexcept { return transcripts_; }
    /// True when the cause was a BackendError (transport, auth, script...).
    bool backend_failure() const noexcept { return backend_failure_; }

private:
    std::vector<NegotiationTranscript> transcripts_;
    bool backend_failure_;
};

/// Alternate generator and discriminator turns until they agree or
/// `config.max_turns` responses have been produced. Agreement is either the
/// discriminator answering yes (decision: the generator's) or a generator turn
/// after a dissent adopting the discriminator's label. With max_turns = 1 the
/// single generator answer is taken as the consensus.
NegotiationTranscript run_negotiation(const AgentPair& pair, const Example& input, const NegotiationDeps& deps,
                                      const NegotiationConfig& config);

struct DualTranscripts {
    NegotiationTranscript forward;  // G = a, D = b
    NegotiationTranscript flipped;  // G = b, D = a
};

/// Negotiation followed by an independent role-flipped negotiation. Both run
/// even if one fails; the failure is then rethrown as a NegotiationError
/// carrying both transcripts.
DualTranscripts run_dual(const std::string& a, const std::string& b, const Example& input, const NegotiationDeps& deps,
                         const NegotiationConfig& config);

enum class Reconciliation { Final, Escalate, Unresolved };

std::string_view to_string(Reconciliation r) noexcept;

struct ReconcileResult {
    Reconciliation kind = Reconciliation::Unresolved;
    std::optional<Label> label;  // set iff kind == Final
};

/// Equal consensus -> Final; exactly one consensus -> Final with that label;
/// conflicting consensus -> Escalate; neither -> Unresolved.
ReconcileResult reconcile(const NegotiationOutcome& forward, const NegotiationOutcome& flipped);

struct VoteResult {
    Label label;
    VoteTally tally;
    bool used_fallback = false;
};

/// Vote over exactly six outcomes. Only consensus outcomes vote. Ties go to
/// the label whose supporting negotiations used fewer turns in total, then
/// to the earlier label in `space`. With no votes at all, `fallback` wins.
VoteResult majority_vote(std::span<const NegotiationOutcome> outcomes, const LabelSpace& space, const Label& fallback);

struct ArbitrationResult {
    /// (G=third, D=a), (G=a, D=third), (G=third, D=b), (G=b, D=third).
    std::vector<NegotiationTranscript> transcripts;
    VoteResult vote;
};

/// Dual negotiations of `third` with each of `a` and `b`, then a vote over the
/// two original outcomes and these four. The fallback label is the first
/// generator decision of `original.forward`.
ArbitrationResult arbitrate(const std::string& third, const std::string& a, const std::string& b,
                            const Example& input, const DualTranscripts& original, const NegotiationDeps& deps,
                            const NegotiationConfig& config);

enum class Mode { VanillaIcl, SelfNegotiation, PairNegotiation, DualNegotiation, DualWithArbitration };

std::string_view to_string(Mode m) noexcept;
/// Throws ConfigError for an unknown name.
Mode mode_from_string(std::string_view s);

/// An experiment setting and the agents filling it. Agent counts: vanilla_icl
/// 1, self_negotiation 1, pair_negotiation 2 (generator, discriminator),
/// dual_negotiation 2, dual_with_arbitration 3 (the third arbitrates).
struct PipelineMode {
    Mode mode = Mode::VanillaIcl;
    std::vector<std::string> agents;

    /// Throws ModeError when the agent count does not fit the mode.
    void validate() const;
    std::string describe() const;
};

/// Run one input through `mode` and decide its final label.
SessionResult run_session(const PipelineMode& mode, const Example& input, const NegotiationDeps& deps,
                          const NegotiationConfig& config);

}  // namespace negotiate
