#pragma once

#include <nlohmann/json.hpp>

#include "negotiate/domain.hpp"

// JSON forms of transcripts and session results. The transcript object is
//   {input_id, gen_agent, disc_agent,
//    turns: [{index, role, agent_id, prompt, response_raw, parsed}],
//    outcome: {kind, decision, turns_used}}
// where `parsed` is {decision, reasoning} for generator turns and
// {attitude, explanation, decision} for discriminator turns.
namespace negotiate {

nlohmann::json to_json(const NegotiationOutcome& o);
NegotiationOutcome outcome_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Turn& t);
Turn turn_from_json(const nlohmann::json& j);

nlohmann::json to_json(const NegotiationTranscript& t);
/// `input` supplies the example the transcript refers to; its id must match.
NegotiationTranscript transcript_from_json(const nlohmann::json& j, const Example& input);

nlohmann::json to_json(const Example& e);
Example example_from_json(const nlohmann::json& j);

nlohmann::json to_json(const VoteTally& t);
VoteTally tally_from_json(const nlohmann::json& j);

/// Session object: the example, its transcripts, final label, provenance and
/// (when a vote happened) the tally.
nlohmann::json to_json(const SessionResult& s);
SessionResult session_from_json(const nlohmann::json& j);

}  // namespace negotiate
