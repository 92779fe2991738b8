#pragma once

#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "negotiate/backend.hpp"

namespace negotiate {

/// Offline stand-in for a language model. It reads the prompt structure back
/// (see inspect_prompt), scores the test input by counting cue words and
/// answers in the response grammar. Deterministic for a given prompt.
struct LexiconOptions {
    std::vector<std::string> positive_words;
    std::vector<std::string> negative_words;
    /// Minimum |score| at which the agent holds its own label against the
    /// other party. Below it a generator adopts the discriminator's label and
    /// a discriminator accepts the generator's.
    int conviction = 1;

    static LexiconOptions defaults();
};

class LexiconBackend : public AgentBackend {
public:
    explicit LexiconBackend(LexiconOptions options = LexiconOptions::defaults());

    Completion complete(const CompletionRequest& req) override;

    /// Positive minus negative cue-word hits.
    int score(std::string_view text) const;
    std::size_t calls() const;

private:
    std::set<std::string> positive_;
    std::set<std::string> negative_;
    int conviction_;
    mutable std::mutex mu_;
    std::size_t calls_ = 0;
};

}  // namespace negotiate
