#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "negotiate/backend.hpp"
#include "negotiate/domain.hpp"

namespace negotiate {

/// Deterministic text -> fixed-dimension vector map used as the similarity
/// function for demonstration retrieval.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<float> embed(std::string_view text) const = 0;
    virtual std::size_t dim() const = 0;
    virtual std::string name() const = 0;
};

/// Lowercased word unigrams followed by adjacent-word bigrams ("a b").
std::vector<std::string> tfidf_terms(std::string_view text);

/// TF-IDF over word unigrams and bigrams, L2-normalised. The vocabulary is
/// the `max_features` most document-frequent terms of the fitting corpus
/// (ties by term), stored in lexicographic order.
class TfidfEmbedder final : public Embedder {
public:
    static constexpr std::string_view kName = "tfidf-unigram-bigram";

    static TfidfEmbedder fit(const std::vector<std::string>& corpus, std::size_t max_features = 4096);
    TfidfEmbedder(std::vector<std::string> vocabulary, std::vector<float> idf);

    std::vector<float> embed(std::string_view text) const override;
    std::size_t dim() const override { return vocab_.size(); }
    std::string name() const override { return std::string(kName); }

    const std::vector<std::string>& vocabulary() const noexcept { return vocab_; }

    nlohmann::json to_json() const;
    static TfidfEmbedder from_json(const nlohmann::json& j);

private:
    std::vector<std::string> vocab_;
    std::vector<float> idf_;
    std::unordered_map<std::string, std::size_t> lookup_;
};

/// Immutable exact-scan index over labelled training examples.
class TrainIndex {
public:
    /// Every example must carry a gold label.
    static TrainIndex build(std::vector<Example> examples, const Embedder& embedder);
    TrainIndex(std::vector<Example> examples, std::vector<float> vectors, std::size_t dim, std::string embedder_name);

    std::size_t size() const noexcept { return examples_.size(); }
    std::size_t dim() const noexcept { return dim_; }
    const std::string& embedder_name() const noexcept { return embedder_name_; }
    const Example& example(std::size_t i) const { return examples_.at(i); }
    std::span<const float> vector(std::size_t i) const;
    double norm(std::size_t i) const { return norms_.at(i); }

    /// Directory layout: manifest.json {embedder, dim, count, format},
    /// vectors.f32 (little-endian float32, row-major) and examples.jsonl.
    void save(const std::filesystem::path& dir) const;
    static TrainIndex load(const std::filesystem::path& dir);

private:
    std::vector<Example> examples_;
    std::vector<float> vectors_;
    std::vector<double> norms_;
    std::size_t dim_ = 0;
    std::string embedder_name_;
};

struct Neighbor {
    std::size_t position = 0;  // row in the index
    Example example;
    double score = 0.0;  // cosine similarity in [-1, 1]
};

/// The min(k, |index|) rows most cosine-similar to `query`, best first; equal
/// scores keep index order. A zero vector has similarity 0 to everything.
/// Throws DimensionMismatchError when the query width differs from the index.
std::vector<Neighbor> knn_retrieve(const TrainIndex& index, std::span<const float> query, std::size_t k);
std::vector<Neighbor> knn_retrieve(const TrainIndex& index, const Embedder& embedder, const Example& query,
                                   std::size_t k);

/// Turn labelled examples into (input, reasoning, decision) triplets by asking
/// `generator` why each input carries its gold label. The gold label is kept
/// whatever the generator argues. With reasoning disabled the examples pass
/// through with empty reasoning and no calls are made.
std::vector<GeneratorDemo> infuse_reasoning(const std::vector<Example>& demos, const AgentHandle& generator,
                                            const NegotiationConfig& config);

/// Six-element demonstrations with an assenting attitude and an explanation
/// elicited from `discriminator`. Throws std::invalid_argument on empty input.
std::vector<DiscriminatorDemo> build_discriminator_demos(const std::vector<GeneratorDemo>& gen_demos,
                                                         const AgentHandle& discriminator,
                                                         const NegotiationConfig& config);

struct DemoSet {
    std::vector<GeneratorDemo> generator;
    std::vector<DiscriminatorDemo> discriminator;
};

/// Supplies per-input demonstrations to negotiations.
class DemoSource {
public:
    virtual ~DemoSource() = default;
    virtual DemoSet demos_for(const Example& input, const AgentHandle& generator, const AgentHandle& discriminator,
                              const NegotiationConfig& config) const = 0;
};

/// k-NN retrieval from a training index with per-agent augmentation. Each
/// training example is augmented at most once per (agent, reasoning flag).
class RetrievalDemoSource final : public DemoSource {
public:
    RetrievalDemoSource(std::shared_ptr<const TrainIndex> index, std::shared_ptr<const Embedder> embedder);

    DemoSet demos_for(const Example& input, const AgentHandle& generator, const AgentHandle& discriminator,
                      const NegotiationConfig& config) const override;

private:
    std::shared_ptr<const TrainIndex> index_;
    std::shared_ptr<const Embedder> embedder_;
    mutable std::mutex mu_;
    mutable std::map<std::tuple<std::size_t, std::string, bool>, GeneratorDemo> gen_cache_;
    mutable std::map<std::tuple<std::size_t, std::string, std::string, bool>, DiscriminatorDemo> disc_cache_;
};

}  // namespace negotiate
