#include "negotiate/negotiation.hpp"

#include <algorithm>
#include <exception>
#include <functional>
#include <stdexcept>

namespace negotiate {

namespace {

template <typename Parse>
auto ask_and_parse(const AgentHandle& agent, std::string& prompt, const std::string& reminder, double temperature,
                   Parse parse) {
    const auto raw = ask(agent, prompt, temperature);
    try {
        return parse(raw);
    } catch (const ResponseFormatError&) {
        // one re-ask with the format spelled out; a second failure propagates
        prompt += reminder;
        return parse(ask(agent, prompt, temperature));
    }
}

bool is_backend_failure(const std::exception_ptr& ep) {
    try {
        std::rethrow_exception(ep);
    } catch (const NegotiationError& e) {
        return e.backend_failure();
    } catch (const BackendError&) {
        return true;
    } catch (...) {
        return false;
    }
}

std::string describe(const std::exception_ptr& ep) {
    try {
        std::rethrow_exception(ep);
    } catch (const std::exception& e) {
        return e.what();
    } catch (...) {
        return "unknown error";
    }
}

}  // namespace

NegotiationTranscript run_negotiation(const AgentPair& pair, const Example& input, const NegotiationDeps& deps,
                                      const NegotiationConfig& config) {
    config.validate();
    if (!deps.agents) throw std::invalid_argument("NegotiationDeps.agents is null");
    const AgentHandle& gen = deps.agents->at(pair.generator);
    const AgentHandle& disc = deps.agents->at(pair.discriminator);

    NegotiationTranscript t;
    t.input = input;
    t.gen_agent = pair.generator;
    t.disc_agent = pair.discriminator;

    try {
        const DemoSet demos = deps.demos ? deps.demos->demos_for(input, gen, disc, config) : DemoSet{};
        const auto gen_reminder = generator_format_reminder(deps.space, config.reasoning_enabled);
        const auto disc_reminder = discriminator_format_reminder(deps.space, config.reasoning_enabled);

        std::optional<GeneratorResponse> last_gen;
        std::optional<DiscriminatorResponse> last_disc;
        for (int index = 1; index <= config.max_turns; ++index) {
            if (index % 2 == 1) {
                auto prompt = render_generator_prompt(config, deps.space, demos.generator, input,
                                                      last_disc ? &*last_disc : nullptr, deps.templates);
                auto resp = ask_and_parse(gen, prompt, gen_reminder, config.temperature, [&](const std::string& raw) {
                    return parse_generator_response(raw, deps.space);
                });
                t.turns.push_back(Turn{index, Role::Generator, gen.id, std::move(prompt), resp});
                if (config.max_turns == 1) {
                    t.outcome = NegotiationOutcome::consensus(resp.decision, index);
                    return t;
                }
                if (last_disc && resp.decision == last_disc->decision) {
                    t.outcome = NegotiationOutcome::consensus(resp.decision, index);
                    return t;
                }
                last_gen = std::move(resp);
            } else {
                auto prompt = render_discriminator_prompt(config, deps.space, demos.discriminator, input, *last_gen,
                                                          deps.templates);
                auto resp = ask_and_parse(disc, prompt, disc_reminder, config.temperature, [&](const std::string& raw) {
                    return parse_discriminator_response(raw, deps.space, last_gen->decision);
                });
                t.turns.push_back(Turn{index, Role::Discriminator, disc.id, std::move(prompt), resp});
                if (resp.attitude == Attitude::Yes) {
                    t.outcome = NegotiationOutcome::consensus(last_gen->decision, index);
                    return t;
                }
                last_disc = std::move(resp);
            }
        }
        t.outcome = NegotiationOutcome::no_consensus(config.max_turns);
        return t;
    } catch (const std::exception& e) {
        t.outcome = NegotiationOutcome::no_consensus(static_cast<int>(t.turns.size()));
        const bool backend = dynamic_cast<const BackendError*>(&e) != nullptr;
        throw NegotiationError("negotiation " + pair.generator + "->" + pair.discriminator + " on '" + input.id +
                                   "' failed at turn " + std::to_string(t.turns.size() + 1) + ": " + e.what(),
                               {std::move(t)}, backend);
    }
}

DualTranscripts run_dual(const std::string& a, const std::string& b, const Example& input, const NegotiationDeps& deps,
                         const NegotiationConfig& config) {
    std::vector<NegotiationTranscript> produced;
    std::exception_ptr first_error;
    DualTranscripts out;
    const auto run_side = [&](const AgentPair& pair, NegotiationTranscript& slot) {
        try {
            slot = run_negotiation(pair, input, deps, config);
            produced.push_back(slot);
        } catch (const NegotiationError& e) {
            for (const auto& t : e.transcripts()) produced.push_back(t);
            if (!first_error) first_error = std::current_exception();
        }
    };
    run_side(AgentPair{a, b}, out.forward);
    run_side(AgentPair{b, a}, out.flipped);
    if (first_error)
        throw NegotiationError(describe(first_error), std::move(produced), is_backend_failure(first_error));
    return out;
}

std::string_view to_string(Reconciliation r) noexcept {
    switch (r) {
        case Reconciliation::Final: return "final";
        case Reconciliation::Escalate: return "escalate";
        case Reconciliation::Unresolved: return "unresolved";
    }
    return "unresolved";
}

ReconcileResult reconcile(const NegotiationOutcome& forward, const NegotiationOutcome& flipped) {
    const bool f = forward.is_consensus();
    const bool r = flipped.is_consensus();
    if (f && r) {
        if (*forward.decision == *flipped.decision) return {Reconciliation::Final, forward.decision};
        return {Reconciliation::Escalate, std::nullopt};
    }
    if (f) return {Reconciliation::Final, forward.decision};
    if (r) return {Reconciliation::Final, flipped.decision};
    return {Reconciliation::Unresolved, std::nullopt};
}

VoteResult majority_vote(std::span<const NegotiationOutcome> outcomes, const LabelSpace& space, const Label& fallback) {
    if (outcomes.size() != 6) throw std::invalid_argument("majority_vote expects exactly 6 outcomes");
    const auto n = space.size();
    std::vector<int> votes(n, 0);
    std::vector<int> turns(n, 0);
    for (const auto& o : outcomes) {
        if (!o.is_consensus() || !space.contains(*o.decision)) continue;
        const auto i = space.index_of(*o.decision);
        ++votes[i];
        turns[i] += o.turns_used;
    }
    VoteResult result;
    for (std::size_t i = 0; i < n; ++i) result.tally.counts.emplace_back(space.at(i), votes[i]);

    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < n; ++i) {
        if (votes[i] == 0) continue;
        if (!best || votes[i] > votes[*best] || (votes[i] == votes[*best] && turns[i] < turns[*best])) best = i;
    }
    if (!best) {
        result.label = fallback;
        result.used_fallback = true;
    } else {
        result.label = space.at(*best);
    }
    return result;
}

ArbitrationResult arbitrate(const std::string& third, const std::string& a, const std::string& b,
                            const Example& input, const DualTranscripts& original, const NegotiationDeps& deps,
                            const NegotiationConfig& config) {
    if (third == a || third == b) throw std::invalid_argument("the arbitrating agent must differ from both parties");
    std::vector<NegotiationTranscript> produced;
    std::exception_ptr first_error;
    for (const auto* other : {&a, &b}) {
        try {
            auto dual = run_dual(third, *other, input, deps, config);
            produced.push_back(std::move(dual.forward));
            produced.push_back(std::move(dual.flipped));
        } catch (const NegotiationError& e) {
            for (const auto& t : e.transcripts()) produced.push_back(t);
            if (!first_error) first_error = std::current_exception();
        }
    }
    if (first_error) {
        std::vector<NegotiationTranscript> all{original.forward, original.flipped};
        all.insert(all.end(), produced.begin(), produced.end());
        throw NegotiationError(describe(first_error), std::move(all), is_backend_failure(first_error));
    }

    std::vector<NegotiationOutcome> outcomes{original.forward.outcome, original.flipped.outcome};
    for (const auto& t : produced) outcomes.push_back(t.outcome);
    ArbitrationResult result;
    result.vote = majority_vote(outcomes, deps.space, original.forward.first_decision());
    result.transcripts = std::move(produced);
    return result;
}

std::string_view to_string(Mode m) noexcept {
    switch (m) {
        case Mode::VanillaIcl: return "vanilla_icl";
        case Mode::SelfNegotiation: return "self_negotiation";
        case Mode::PairNegotiation: return "pair_negotiation";
        case Mode::DualNegotiation: return "dual_negotiation";
        case Mode::DualWithArbitration: return "dual_with_arbitration";
    }
    return "vanilla_icl";
}

Mode mode_from_string(std::string_view s) {
    for (auto m : {Mode::VanillaIcl, Mode::SelfNegotiation, Mode::PairNegotiation, Mode::DualNegotiation,
                   Mode::DualWithArbitration})
        if (to_string(m) == s) return m;
    throw ConfigError("unknown mode '" + std::string(s) + "'");
}

void PipelineMode::validate() const {
    std::size_t expected = 1;
    switch (mode) {
        case Mode::VanillaIcl:
        case Mode::SelfNegotiation: expected = 1; break;
        case Mode::PairNegotiation:
        case Mode::DualNegotiation: expected = 2; break;
        case Mode::DualWithArbitration: expected = 3; break;
    }
    if (agents.size() != expected)
        throw ModeError("mode " + std::string(to_string(mode)) + " needs " + std::to_string(expected) +
                        " agent(s), got " + std::to_string(agents.size()));
    if (mode == Mode::DualWithArbitration && (agents[2] == agents[0] || agents[2] == agents[1]))
        throw ModeError("the arbitrating agent must differ from the negotiating pair");
}

std::string PipelineMode::describe() const {
    std::string out(to_string(mode));
    out += "(";
    for (std::size_t i = 0; i < agents.size(); ++i) out += (i ? "," : "") + agents[i];
    return out + ")";
}

namespace {

SessionResult single_negotiation_session(const AgentPair& pair, const Example& input, const NegotiationDeps& deps,
                                         const NegotiationConfig& config) {
    SessionResult s;
    s.input = input;
    s.primary = run_negotiation(pair, input, deps, config);
    if (s.primary.outcome.is_consensus()) {
        s.final = *s.primary.outcome.decision;
        s.provenance = Provenance::SingleConsensus;
    } else {
        s.final = s.primary.first_decision();
        s.provenance = Provenance::Fallback;
    }
    return s;
}

}  // namespace

SessionResult run_session(const PipelineMode& mode, const Example& input, const NegotiationDeps& deps,
                          const NegotiationConfig& config) {
    mode.validate();
    const auto& ag = mode.agents;
    switch (mode.mode) {
        case Mode::VanillaIcl: {
            auto single = config;
            single.max_turns = 1;
            return single_negotiation_session({ag[0], ag[0]}, input, deps, single);
        }
        case Mode::SelfNegotiation: return single_negotiation_session({ag[0], ag[0]}, input, deps, config);
        case Mode::PairNegotiation: return single_negotiation_session({ag[0], ag[1]}, input, deps, config);
        case Mode::DualNegotiation:
        case Mode::DualWithArbitration: break;
    }

    auto dual = run_dual(ag[0], ag[1], input, deps, config);
    SessionResult s;
    s.input = input;
    s.primary = dual.forward;
    s.flipped = dual.flipped;
    const auto rec = reconcile(dual.forward.outcome, dual.flipped.outcome);
    if (rec.kind == Reconciliation::Final) {
        s.final = *rec.label;
        s.provenance = dual.forward.outcome.is_consensus() && dual.flipped.outcome.is_consensus()
                           ? Provenance::Agreement
                           : Provenance::SingleConsensus;
        return s;
    }
    if (mode.mode == Mode::DualNegotiation) {
        // no arbiter: keep the forward negotiation's view
        s.final = rec.kind == Reconciliation::Escalate ? *dual.forward.outcome.decision : dual.forward.first_decision();
        s.provenance = Provenance::Fallback;
        return s;
    }
    auto arb = arbitrate(ag[2], ag[0], ag[1], input, dual, deps, config);
    s.arbitration = std::move(arb.transcripts);
    s.tally = std::move(arb.vote.tally);
    s.final = std::move(arb.vote.label);
    s.provenance = Provenance::Vote;
    return s;
}

}  // namespace negotiate
