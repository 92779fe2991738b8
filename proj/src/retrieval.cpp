#include "negotiate/retrieval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "negotiate/prompting.hpp"
#include "negotiate/serialization.hpp"
#include "negotiate/text.hpp"

namespace negotiate {

// ---- TF-IDF -----------------------------------------------------------------

std::vector<std::string> tfidf_terms(std::string_view s) {
    std::vector<std::string> words;
    std::string cur;
    for (char c : s) {
        const auto u = static_cast<unsigned char>(c);
        if (std::isalnum(u) || c == '\'' || u >= 0x80) {
            cur.push_back(static_cast<char>(std::tolower(u)));
        } else if (!cur.empty()) {
            words.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) words.push_back(std::move(cur));

    std::vector<std::string> terms = words;
    for (std::size_t i = 0; i + 1 < words.size(); ++i) terms.push_back(words[i] + " " + words[i + 1]);
    return terms;
}

TfidfEmbedder TfidfEmbedder::fit(const std::vector<std::string>& corpus, std::size_t max_features) {
    if (max_features == 0) throw std::invalid_argument("max_features must be positive");
    std::map<std::string, std::size_t> df;
    for (const auto& doc : corpus) {
        auto terms = tfidf_terms(doc);
        std::sort(terms.begin(), terms.end());
        terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
        for (auto& t : terms) ++df[t];
    }
    std::vector<std::pair<std::string, std::size_t>> ranked(df.begin(), df.end());
    if (ranked.size() > max_features) {
        std::stable_sort(ranked.begin(), ranked.end(),
                         [](const auto& a, const auto& b) { return a.second > b.second; });
        ranked.resize(max_features);
        std::sort(ranked.begin(), ranked.end());
    }
    if (ranked.empty()) ranked.emplace_back("<empty>", 0);  // keep dim >= 1

    const double n = static_cast<double>(corpus.size());
    std::vector<std::string> vocab;
    std::vector<float> idf;
    for (const auto& [term, count] : ranked) {
        vocab.push_back(term);
        idf.push_back(static_cast<float>(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0));
    }
    return TfidfEmbedder(std::move(vocab), std::move(idf));
}

TfidfEmbedder::TfidfEmbedder(std::vector<std::string> vocabulary, std::vector<float> idf)
    : vocab_(std::move(vocabulary)), idf_(std::move(idf)) {
    if (vocab_.empty() || vocab_.size() != idf_.size())
        throw std::invalid_argument("vocabulary and idf must be non-empty and of equal length");
    for (std::size_t i = 0; i < vocab_.size(); ++i) lookup_.emplace(vocab_[i], i);
}

std::vector<float> TfidfEmbedder::embed(std::string_view s) const {
    std::vector<double> acc(vocab_.size(), 0.0);
    for (const auto& term : tfidf_terms(s)) {
        const auto it = lookup_.find(term);
        if (it != lookup_.end()) acc[it->second] += idf_[it->second];
    }
    double norm = 0.0;
    for (double v : acc) norm += v * v;
    norm = std::sqrt(norm);
    std::vector<float> out(acc.size(), 0.0f);
    if (norm > 0.0)
        for (std::size_t i = 0; i < acc.size(); ++i) out[i] = static_cast<float>(acc[i] / norm);
    return out;
}

nlohmann::json TfidfEmbedder::to_json() const {
    return {{"name", kName}, {"vocabulary", vocab_}, {"idf", idf_}};
}

TfidfEmbedder TfidfEmbedder::from_json(const nlohmann::json& j) {
    if (j.at("name").get<std::string>() != kName) throw std::invalid_argument("not a TF-IDF embedder state");
    return TfidfEmbedder(j.at("vocabulary").get<std::vector<std::string>>(), j.at("idf").get<std::vector<float>>());
}

// ---- index ------------------------------------------------------------------

namespace {

double squared_norm(std::span<const float> v) {
    double s = 0.0;
    for (float x : v) s += static_cast<double>(x) * static_cast<double>(x);
    return s;
}

double cosine(std::span<const float> a, double a_norm, std::span<const float> b, double b_norm) {
    if (a_norm == 0.0 || b_norm == 0.0) return 0.0;
    double dot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) dot += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return std::clamp(dot / (a_norm * b_norm), -1.0, 1.0);
}

void put_le32(std::ostream& out, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, sizeof bits);
    const char bytes[4] = {static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                           static_cast<char>((bits >> 16) & 0xff), static_cast<char>((bits >> 24) & 0xff)};
    out.write(bytes, 4);
}

float get_le32(const unsigned char* p) {
    const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                               (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
    float f;
    std::memcpy(&f, &bits, sizeof f);
    return f;
}

}  // namespace

TrainIndex TrainIndex::build(std::vector<Example> examples, const Embedder& embedder) {
    std::vector<float> flat;
    flat.reserve(examples.size() * embedder.dim());
    for (const auto& e : examples) {
        if (!e.gold) throw InvariantError("training example '" + e.id + "' has no gold label");
        const auto v = embedder.embed(e.text);
        if (v.size() != embedder.dim()) throw DimensionMismatchError("embedder returned an unexpected width");
        flat.insert(flat.end(), v.begin(), v.end());
    }
    return TrainIndex(std::move(examples), std::move(flat), embedder.dim(), embedder.name());
}

TrainIndex::TrainIndex(std::vector<Example> examples, std::vector<float> vectors, std::size_t dim,
                       std::string embedder_name)
    : examples_(std::move(examples)), vectors_(std::move(vectors)), dim_(dim), embedder_name_(std::move(embedder_name)) {
    if (dim_ == 0) throw std::invalid_argument("index dimension must be positive");
    if (vectors_.size() != examples_.size() * dim_) throw DimensionMismatchError("vector block does not match count x dim");
    for (const auto& e : examples_)
        if (!e.gold) throw InvariantError("training example '" + e.id + "' has no gold label");
    norms_.reserve(examples_.size());
    for (std::size_t i = 0; i < examples_.size(); ++i) norms_.push_back(std::sqrt(squared_norm(vector(i))));
}

std::span<const float> TrainIndex::vector(std::size_t i) const {
    if (i >= examples_.size()) throw std::out_of_range("index row out of range");
    return std::span<const float>(vectors_).subspan(i * dim_, dim_);
}

void TrainIndex::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    {
        std::ofstream m(dir / "manifest.json");
        m << nlohmann::json{{"embedder", embedder_name_}, {"dim", dim_}, {"count", size()}, {"format", 1}}.dump(2)
          << '\n';
        if (!m) throw IoError("cannot write " + (dir / "manifest.json").string());
    }
    {
        std::ofstream v(dir / "vectors.f32", std::ios::binary);
        for (float f : vectors_) put_le32(v, f);
        if (!v) throw IoError("cannot write " + (dir / "vectors.f32").string());
    }
    std::ofstream ex(dir / "examples.jsonl");
    for (const auto& e : examples_) ex << to_json(e).dump() << '\n';
    if (!ex) throw IoError("cannot write " + (dir / "examples.jsonl").string());
}

TrainIndex TrainIndex::load(const std::filesystem::path& dir) {
    std::ifstream m(dir / "manifest.json");
    if (!m) throw IoError("cannot read " + (dir / "manifest.json").string());
    const auto manifest = nlohmann::json::parse(m);
    const auto dim = manifest.at("dim").get<std::size_t>();
    const auto count = manifest.at("count").get<std::size_t>();

    std::vector<Example> examples;
    std::ifstream ex(dir / "examples.jsonl");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(ex, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            examples.push_back(example_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw JsonlError(line_no, e.what());
        }
    }
    if (examples.size() != count) throw IoError("examples.jsonl does not hold the manifest count");

    std::ifstream v(dir / "vectors.f32", std::ios::binary);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(v)), std::istreambuf_iterator<char>());
    if (bytes.size() != count * dim * 4) throw IoError("vectors.f32 has the wrong size");
    std::vector<float> flat(count * dim);
    for (std::size_t i = 0; i < flat.size(); ++i) flat[i] = get_le32(bytes.data() + 4 * i);
    return TrainIndex(std::move(examples), std::move(flat), dim, manifest.at("embedder").get<std::string>());
}

std::vector<Neighbor> knn_retrieve(const TrainIndex& index, std::span<const float> query, std::size_t k) {
    if (query.size() != index.dim())
        throw DimensionMismatchError("query has dimension " + std::to_string(query.size()) + ", index has " +
                                     std::to_string(index.dim()));
    const std::size_t n = std::min(k, index.size());
    if (n == 0) return {};
    const double q_norm = std::sqrt(squared_norm(query));
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(index.size());
    for (std::size_t i = 0; i < index.size(); ++i) {
        const auto row = index.vector(i);
        scored.emplace_back(cosine(query, q_norm, row, index.norm(i)), i);
    }
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(),
                      [](const auto& a, const auto& b) {
                          if (a.first != b.first) return a.first > b.first;
                          return a.second < b.second;
                      });
    std::vector<Neighbor> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(Neighbor{scored[i].second, index.example(scored[i].second), scored[i].first});
    return out;
}

std::vector<Neighbor> knn_retrieve(const TrainIndex& index, const Embedder& embedder, const Example& query,
                                   std::size_t k) {
    const auto v = embedder.embed(query.text);
    return knn_retrieve(index, v, k);
}

// ---- augmentation -----------------------------------------------------------

std::vector<GeneratorDemo> infuse_reasoning(const std::vector<Example>& demos, const AgentHandle& generator,
                                            const NegotiationConfig& config) {
    std::vector<GeneratorDemo> out;
    out.reserve(demos.size());
    for (const auto& d : demos) {
        if (!d.gold) throw InvariantError("demonstration '" + d.id + "' has no gold label");
        if (!config.reasoning_enabled) {
            out.push_back(GeneratorDemo{d.text, {}, *d.gold});
            continue;
        }
        const auto prompt = render_reasoning_prompt(d.text, d.topic, *d.gold);
        auto steps = parse_reasoning_steps(ask(generator, prompt, config.temperature), true);
        if (steps.empty()) {
            const auto retry = prompt + "\n\n" + std::string(kReminderHeader) +
                               " number every step as \"Step 1: ...\", \"Step 2: ...\".";
            steps = parse_reasoning_steps(ask(generator, retry, config.temperature), true);
        }
        if (steps.empty())
            throw MalformedReasoningError("no reasoning steps for demonstration '" + d.id + "' from agent '" +
                                          generator.id + "'");
        out.push_back(GeneratorDemo{d.text, std::move(steps), *d.gold});
    }
    return out;
}

namespace {

std::string extract_explanation(std::string_view raw) {
    auto s = text::trim(raw);
    std::size_t i = 0;
    while (i < s.size() && !std::isalpha(static_cast<unsigned char>(s[i]))) ++i;
    if (text::to_lower(s.substr(i, 3)) == "yes" &&
        (i + 3 == s.size() || !std::isalpha(static_cast<unsigned char>(s[i + 3])))) {
        s.remove_prefix(i + 3);
        while (!s.empty() && (std::ispunct(static_cast<unsigned char>(s.front())) ||
                              std::isspace(static_cast<unsigned char>(s.front()))))
            s.remove_prefix(1);
    }
    return std::string(text::trim(s));
}

}  // namespace

std::vector<DiscriminatorDemo> build_discriminator_demos(const std::vector<GeneratorDemo>& gen_demos,
                                                         const AgentHandle& discriminator,
                                                         const NegotiationConfig& config) {
    if (gen_demos.empty()) throw std::invalid_argument("build_discriminator_demos needs at least one demo");
    std::vector<DiscriminatorDemo> out;
    out.reserve(gen_demos.size());
    for (const auto& g : gen_demos) {
        if (!config.reasoning_enabled) {
            out.emplace_back(g.input, g.reasoning, g.decision, Attitude::Yes, std::string{}, g.decision, false);
            continue;
        }
        const auto prompt = render_explanation_prompt(g);
        auto explanation = extract_explanation(ask(discriminator, prompt, config.temperature));
        if (explanation.empty()) {
            const auto retry = prompt + "\n\n" + std::string(kReminderHeader) +
                               " answer \"Yes.\" followed by a one-sentence explanation.";
            explanation = extract_explanation(ask(discriminator, retry, config.temperature));
        }
        if (explanation.empty())
            throw MalformedExplanationError("no explanation from agent '" + discriminator.id + "'");
        out.emplace_back(g.input, g.reasoning, g.decision, Attitude::Yes, std::move(explanation), g.decision);
    }
    return out;
}

RetrievalDemoSource::RetrievalDemoSource(std::shared_ptr<const TrainIndex> index,
                                         std::shared_ptr<const Embedder> embedder)
    : index_(std::move(index)), embedder_(std::move(embedder)) {
    if (!index_ || !embedder_) throw std::invalid_argument("RetrievalDemoSource needs an index and an embedder");
    if (index_->dim() != embedder_->dim())
        throw DimensionMismatchError("index and embedder dimensions differ");
}

DemoSet RetrievalDemoSource::demos_for(const Example& input, const AgentHandle& generator,
                                       const AgentHandle& discriminator, const NegotiationConfig& config) const {
    DemoSet set;
    if (config.k_demos <= 0) return set;
    const auto neighbors = knn_retrieve(*index_, *embedder_, input, static_cast<std::size_t>(config.k_demos));
    const bool r = config.reasoning_enabled;
    for (const auto& n : neighbors) {
        const auto gkey = std::make_tuple(n.position, generator.id, r);
        std::optional<GeneratorDemo> gen;
        {
            std::lock_guard lock(mu_);
            if (auto it = gen_cache_.find(gkey); it != gen_cache_.end()) gen = it->second;
        }
        if (!gen) {
            gen = infuse_reasoning({n.example}, generator, config).front();
            std::lock_guard lock(mu_);
            gen_cache_.emplace(gkey, *gen);
        }

        const auto dkey = std::make_tuple(n.position, generator.id, discriminator.id, r);
        std::optional<DiscriminatorDemo> disc;
        {
            std::lock_guard lock(mu_);
            if (auto it = disc_cache_.find(dkey); it != disc_cache_.end()) disc = it->second;
        }
        if (!disc) {
            disc = build_discriminator_demos({*gen}, discriminator, config).front();
            std::lock_guard lock(mu_);
            disc_cache_.emplace(dkey, *disc);
        }
        set.generator.push_back(std::move(*gen));
        set.discriminator.push_back(std::move(*disc));
    }
    return set;
}

}  // namespace negotiate
