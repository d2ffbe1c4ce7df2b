#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "cer/cache.hpp"

namespace cer::embedding {

inline constexpr int kDefaultDimension = 384;
inline constexpr double kUnitNormTolerance = 1e-6;

struct EmbeddingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmbeddingTransportError : EmbeddingError {
    using EmbeddingError::EmbeddingError;
};

// Unit-normalized sentence embedding. Construction is the single
// normalization point; similarity is then a plain dot product.
class EmbeddingVector {
public:
    EmbeddingVector() = default;

    // Normalizes `raw` (accumulating in double); rejects zero vectors.
    static EmbeddingVector normalized(std::vector<float> raw);
    // Accepts an already-unit vector; enforces |norm - 1| <= 1e-6.
    static EmbeddingVector from_unit(std::vector<float> components);

    int dimension() const { return static_cast<int>(components_.size()); }
    std::span<const float> components() const { return components_; }

    bool operator==(const EmbeddingVector&) const = default;

private:
    explicit EmbeddingVector(std::vector<float> components)
        : components_(std::move(components)) {}
    std::vector<float> components_;
};

// Dot product over unit vectors, accumulated in double and clamped to [-1, 1].
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

struct SearchHit {
    std::string example_id;
    double score = 0.0;

    bool operator==(const SearchHit&) const = default;
};

// Exact linear-scan index. Entry order is insertion order; ties on score are
// broken by earliest insertion.
class EmbeddingIndex {
public:
    explicit EmbeddingIndex(int dimension = kDefaultDimension) : dimension_(dimension) {}

    void add(std::string example_id, EmbeddingVector vector);

    int dimension() const { return dimension_; }
    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }
    const std::vector<std::pair<std::string, EmbeddingVector>>& entries() const { return entries_; }

    SearchHit top1(const EmbeddingVector& query) const;
    std::vector<SearchHit> topk(const EmbeddingVector& query, std::size_t k) const;

    bool operator==(const EmbeddingIndex& other) const {
        return dimension_ == other.dimension_ && entries_ == other.entries_;
    }

private:
    int dimension_;
    std::vector<std::pair<std::string, EmbeddingVector>> entries_;
    std::unordered_set<std::string> ids_;
};

class EmbedderBackend {
public:
    virtual ~EmbedderBackend() = default;

    // Backend name + model name; namespaces the cache.
    virtual std::string identity() const = 0;
    virtual int dimension() const = 0;

    // Raw (not yet normalized) vectors, one per text, order-preserving.
    virtual std::vector<std::vector<float>> embed_batch(const std::vector<std::string>& texts) = 0;
};

// Deterministic offline backend: the text hash seeds a pseudo-random
// projection onto the unit sphere. Same seed + same text => identical vector.
class MockEmbedder final : public EmbedderBackend {
public:
    explicit MockEmbedder(std::uint64_t seed = 0, int dimension = kDefaultDimension)
        : seed_(seed), dimension_(dimension) {}

    std::string identity() const override;
    int dimension() const override { return dimension_; }
    std::vector<std::vector<float>> embed_batch(const std::vector<std::string>& texts) override;

private:
    std::uint64_t seed_;
    int dimension_;
};

// OpenAI-embeddings-compatible HTTP backend: POST {url} with
// {"model": ..., "input": [...]}, reads data[i].embedding.
class HttpEmbedder final : public EmbedderBackend {
public:
    HttpEmbedder(std::string url, std::string model, int dimension = kDefaultDimension,
                 int retry_budget = 3);

    std::string identity() const override;
    int dimension() const override { return dimension_; }
    std::vector<std::vector<float>> embed_batch(const std::vector<std::string>& texts) override;

private:
    std::string url_;
    std::string model_;
    int dimension_;
    int retry_budget_;
};

// One unit vector per text, order-preserving, cached by
// (backend identity, text hash). Rejects texts that are empty after trimming;
// a backend returning the wrong dimension is a fatal config error.
std::vector<EmbeddingVector> embed_texts(EmbedderBackend& backend,
                                         const std::vector<std::string>& texts,
                                         const FileCache* cache = nullptr);

}  // namespace cer::embedding
