#include "negotiate/serialization.hpp"

namespace negotiate {

using nlohmann::json;

namespace {

json optional_label(const std::optional<Label>& l) { return l ? json(l->value) : json(nullptr); }

std::optional<Label> optional_label(const json& j) {
    if (j.is_null()) return std::nullopt;
    return Label{j.get<std::string>()};
}

}  // namespace

json to_json(const NegotiationOutcome& o) {
    return {{"kind", o.is_consensus() ? "consensus" : "no_consensus"},
            {"decision", optional_label(o.decision)},
            {"turns_used", o.turns_used}};
}

NegotiationOutcome outcome_from_json(const json& j) {
    NegotiationOutcome o;
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "consensus")
        o.kind = OutcomeKind::Consensus;
    else if (kind == "no_consensus")
        o.kind = OutcomeKind::NoConsensus;
    else
        throw InvariantError("unknown outcome kind '" + kind + "'");
    o.decision = optional_label(j.at("decision"));
    o.turns_used = j.at("turns_used").get<int>();
    return o;
}

json to_json(const Turn& t) {
    json parsed;
    if (const auto* g = std::get_if<GeneratorResponse>(&t.response)) {
        parsed = {{"decision", g->decision.value}, {"reasoning", g->reasoning}};
    } else {
        const auto& d = std::get<DiscriminatorResponse>(t.response);
        parsed = {{"attitude", to_string(d.attitude)},
                  {"explanation", d.explanation},
                  {"decision", d.decision.value}};
    }
    return {{"index", t.index},
            {"role", to_string(t.role)},
            {"agent_id", t.agent_id},
            {"prompt", t.prompt},
            {"response_raw", t.raw()},
            {"parsed", std::move(parsed)}};
}

Turn turn_from_json(const json& j) {
    Turn t;
    t.index = j.at("index").get<int>();
    const auto role = j.at("role").get<std::string>();
    t.agent_id = j.at("agent_id").get<std::string>();
    t.prompt = j.at("prompt").get<std::string>();
    const auto raw = j.at("response_raw").get<std::string>();
    const auto& p = j.at("parsed");
    if (role == "generator") {
        t.role = Role::Generator;
        t.response = GeneratorResponse{Label{p.at("decision").get<std::string>()},
                                       p.at("reasoning").get<ReasoningSteps>(), raw};
    } else if (role == "discriminator") {
        t.role = Role::Discriminator;
        const auto att = p.at("attitude").get<std::string>();
        if (att != "yes" && att != "no") throw InvariantError("unknown attitude '" + att + "'");
        t.response = DiscriminatorResponse{att == "yes" ? Attitude::Yes : Attitude::No,
                                           p.at("explanation").get<std::string>(),
                                           Label{p.at("decision").get<std::string>()}, raw};
    } else {
        throw InvariantError("unknown role '" + role + "'");
    }
    return t;
}

json to_json(const NegotiationTranscript& t) {
    json turns = json::array();
    for (const auto& turn : t.turns) turns.push_back(to_json(turn));
    return {{"input_id", t.input.id},
            {"gen_agent", t.gen_agent},
            {"disc_agent", t.disc_agent},
            {"turns", std::move(turns)},
            {"outcome", to_json(t.outcome)}};
}

NegotiationTranscript transcript_from_json(const json& j, const Example& input) {
    NegotiationTranscript t;
    const auto id = j.at("input_id").get<std::string>();
    if (id != input.id)
        throw InvariantError("transcript input '" + id + "' does not match '" + input.id + "'");
    t.input = input;
    t.gen_agent = j.at("gen_agent").get<std::string>();
    t.disc_agent = j.at("disc_agent").get<std::string>();
    for (const auto& turn : j.at("turns")) t.turns.push_back(turn_from_json(turn));
    t.outcome = outcome_from_json(j.at("outcome"));
    return t;
}

json to_json(const Example& e) {
    json j = {{"id", e.id}, {"text", e.text}, {"gold", optional_label(e.gold)}};
    if (e.topic) j["topic"] = *e.topic;
    return j;
}

Example example_from_json(const json& j) {
    Example e;
    e.id = j.at("id").get<std::string>();
    e.text = j.at("text").get<std::string>();
    e.gold = optional_label(j.value("gold", json(nullptr)));
    if (j.contains("topic") && !j.at("topic").is_null()) e.topic = j.at("topic").get<std::string>();
    return e;
}

json to_json(const VoteTally& t) {
    json out = json::array();
    for (const auto& [label, count] : t.counts) out.push_back({{"label", label.value}, {"count", count}});
    return out;
}

VoteTally tally_from_json(const json& j) {
    VoteTally t;
    for (const auto& entry : j)
        t.counts.emplace_back(Label{entry.at("label").get<std::string>()}, entry.at("count").get<int>());
    return t;
}

json to_json(const SessionResult& s) {
    json arbitration = json::array();
    for (const auto& t : s.arbitration) arbitration.push_back(to_json(t));
    return {{"input", to_json(s.input)},
            {"primary", to_json(s.primary)},
            {"flipped", s.flipped ? to_json(*s.flipped) : json(nullptr)},
            {"arbitration", std::move(arbitration)},
            {"tally", s.tally ? to_json(*s.tally) : json(nullptr)},
            {"final", s.final.value},
            {"provenance", to_string(s.provenance)}};
}

SessionResult session_from_json(const json& j) {
    SessionResult s;
    s.input = example_from_json(j.at("input"));
    s.primary = transcript_from_json(j.at("primary"), s.input);
    if (!j.at("flipped").is_null()) s.flipped = transcript_from_json(j.at("flipped"), s.input);
    for (const auto& t : j.at("arbitration")) s.arbitration.push_back(transcript_from_json(t, s.input));
    if (!j.at("tally").is_null()) s.tally = tally_from_json(j.at("tally"));
    s.final = Label{j.at("final").get<std::string>()};
    s.provenance = provenance_from_string(j.at("provenance").get<std::string>());
    return s;
}

}  // namespace negotiate
