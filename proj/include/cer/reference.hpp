#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cer/cache.hpp"
#include "cer/corpus.hpp"
#include "cer/embedding.hpp"
#include "cer/label.hpp"
#include "cer/llm.hpp"

namespace cer::reference {

struct StoreError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A labeled reference utterance with its four generated paraphrases (order
// preserved) and the unit-norm embedding of the original text.
struct ReferenceExample {
    std::string id;
    std::string source;  // dataset name + split, e.g. "meld-train"
    std::string text;
    EmotionLabel label = EmotionLabel::neutral;
    std::array<std::string, 4> paraphrases;
    embedding::EmbeddingVector embedding;

    bool operator==(const ReferenceExample&) const = default;
};

struct ParaphrasePrompt {
    std::string system_text;
    std::string user_template;  // "{text}" placeholder

    static ParaphrasePrompt defaults();
    std::string render_user(const std::string& text) const;
};

struct ParaphraseResult {
    std::array<std::string, 4> paraphrases;
    bool degraded = false;  // padded with the original or fully fallen back
};

// Numbered-list parse ("1." / "1)" / "-"), case-insensitive dedup, first four
// kept; fewer than four distinct parses pad with `original` and flag.
ParaphraseResult parse_paraphrase_response(std::string_view response, const std::string& original);

// Asks the backend for four paraphrases; results cached by
// (llm identity, text hash). Unparseable responses fall back to four copies
// of the original, flagged.
ParaphraseResult generate_paraphrases(const llm::LlmBackend& llm, const std::string& text,
                                      const FileCache* cache = nullptr,
                                      const ParaphrasePrompt& prompt = ParaphrasePrompt::defaults());

// Immutable after construction; shareable across workers.
class ReferenceStore {
public:
    ReferenceStore() = default;

    static ReferenceStore from_examples(std::vector<ReferenceExample> examples,
                                        std::string embedder_identity, std::string llm_identity);

    const std::vector<ReferenceExample>& examples() const { return examples_; }
    const std::vector<std::string>& bucket(EmotionLabel label) const {
        return buckets_[static_cast<std::size_t>(label_index(label))];
    }
    const ReferenceExample* find(std::string_view id) const;
    const embedding::EmbeddingIndex& index() const { return index_; }
    const std::string& embedder_identity() const { return embedder_identity_; }
    const std::string& llm_identity() const { return llm_identity_; }

    // Keeps only examples from the given sources (in-domain restriction).
    // Throws if any emotion bucket becomes empty.
    ReferenceStore filter_sources(const std::vector<std::string>& sources) const;

    bool operator==(const ReferenceStore& other) const {
        return examples_ == other.examples_ && embedder_identity_ == other.embedder_identity_ &&
               llm_identity_ == other.llm_identity_;
    }

private:
    std::vector<ReferenceExample> examples_;
    std::array<std::vector<std::string>, kLabelCount> buckets_;  // ids, store order
    std::map<std::string, std::size_t, std::less<>> by_id_;
    embedding::EmbeddingIndex index_{embedding::kDefaultDimension};
    std::string embedder_identity_;
    std::string llm_identity_;
};

struct SplitSource {
    const corpus::DatasetSplit* split = nullptr;
    std::string source;
};

struct BuildStats {
    std::size_t examples = 0;
    std::array<std::size_t, kLabelCount> bucket_sizes{};
    std::size_t degraded_paraphrases = 0;
    std::size_t paraphrase_cache_hits = 0;
};

// Combines every mapped-label utterance of the given splits, in split order,
// into an augmented store: embeddings over original texts, four paraphrases
// per example. Throws StoreError if any emotion class is empty across the
// union.
ReferenceStore build_reference_store(const std::vector<SplitSource>& splits,
                                     embedding::EmbedderBackend& embedder,
                                     const llm::LlmBackend& paraphraser,
                                     const FileCache* embedding_cache = nullptr,
                                     const FileCache* paraphrase_cache = nullptr, int workers = 4,
                                     BuildStats* stats = nullptr,
                                     const ParaphrasePrompt& prompt = ParaphrasePrompt::defaults());

// Versioned, checksummed line-delimited file; load(save(s)) == s including
// ordering.
void save_store(const ReferenceStore& store, const std::filesystem::path& path);
ReferenceStore load_store(const std::filesystem::path& path);

}  // namespace cer::reference
