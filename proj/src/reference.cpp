#include "cer/reference.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include <json.hpp>

#include "cer/hashing.hpp"
#include "cer/strings.hpp"

namespace cer::reference {

using nlohmann::json;

namespace {
constexpr int kStoreVersion = 1;
}

ParaphrasePrompt ParaphrasePrompt::defaults() {
    ParaphrasePrompt prompt;
    prompt.system_text = "You rewrite sentences while preserving their meaning and emotional tone.";
    prompt.user_template =
        "Generate exactly four distinct paraphrases of the utterance below. Keep the meaning and "
        "the emotional tone. Answer with a numbered list from 1 to 4, one paraphrase per line, "
        "and nothing else.\n\nUtterance: {text}";
    return prompt;
}

std::string ParaphrasePrompt::render_user(const std::string& text) const {
    std::string out = user_template;
    replace_all(out, "{text}", text);
    return out;
}

ParaphraseResult parse_paraphrase_response(std::string_view response,
                                           const std::string& original) {
    std::vector<std::string> candidates;
    std::set<std::string> seen;  // lowercased
    for (const std::string& raw_line : split_lines(response)) {
        std::string_view line = trim(raw_line);
        if (line.empty()) {
            continue;
        }
        std::string_view body;
        if (line.front() == '-') {
            body = trim(line.substr(1));
        } else {
            std::size_t digits = 0;
            while (digits < line.size() && line[digits] >= '0' && line[digits] <= '9') {
                ++digits;
            }
            if (digits == 0 || digits >= line.size() ||
                (line[digits] != '.' && line[digits] != ')')) {
                continue;  // not a list item
            }
            body = trim(line.substr(digits + 1));
        }
        if (body.empty()) {
            continue;
        }
        if (!seen.insert(to_lower(body)).second) {
            continue;
        }
        candidates.emplace_back(body);
        if (candidates.size() == 4) {
            break;
        }
    }

    ParaphraseResult result;
    result.degraded = candidates.size() < 4;
    for (std::size_t i = 0; i < 4; ++i) {
        result.paraphrases[i] = i < candidates.size() ? candidates[i] : original;
    }
    return result;
}

ParaphraseResult generate_paraphrases(const llm::LlmBackend& llm, const std::string& text,
                                      const FileCache* cache, const ParaphrasePrompt& prompt) {
    if (trim(text).empty()) {
        throw std::invalid_argument("generate_paraphrases: text is empty");
    }
    const std::string key = sha256_hex(llm.identity() + "\x1e" + "paraphrases" + "\x1e" + text);
    if (cache != nullptr && cache->enabled()) {
        if (const auto hit = cache->get(key)) {
            try {
                const json doc = json::parse(*hit);
                ParaphraseResult result;
                const auto items = doc.at("paraphrases").get<std::vector<std::string>>();
                if (items.size() == 4) {
                    std::copy(items.begin(), items.end(), result.paraphrases.begin());
                    result.degraded = doc.value("degraded", false);
                    return result;
                }
            } catch (const std::exception&) {
                // Unreadable cache entry: regenerate.
            }
        }
    }

    const auto exchange = llm.complete(prompt.system_text, prompt.render_user(text));
    ParaphraseResult result = parse_paraphrase_response(exchange.response_text, text);

    if (cache != nullptr && cache->enabled()) {
        json doc;
        doc["paraphrases"] = std::vector<std::string>(result.paraphrases.begin(),
                                                      result.paraphrases.end());
        doc["degraded"] = result.degraded;
        cache->put(key, doc.dump());
    }
    return result;
}

ReferenceStore ReferenceStore::from_examples(std::vector<ReferenceExample> examples,
                                             std::string embedder_identity,
                                             std::string llm_identity) {
    ReferenceStore store;
    store.embedder_identity_ = std::move(embedder_identity);
    store.llm_identity_ = std::move(llm_identity);
    const int dimension = examples.empty() ? embedding::kDefaultDimension
                                           : examples.front().embedding.dimension();
    store.index_ = embedding::EmbeddingIndex(dimension);
    store.examples_ = std::move(examples);
    for (std::size_t i = 0; i < store.examples_.size(); ++i) {
        const ReferenceExample& example = store.examples_[i];
        for (const std::string& p : example.paraphrases) {
            if (p.empty()) {
                throw StoreError("example " + example.id + " has an empty paraphrase");
            }
        }
        if (!store.by_id_.emplace(example.id, i).second) {
            throw StoreError("duplicate example id: " + example.id);
        }
        store.buckets_[static_cast<std::size_t>(label_index(example.label))].push_back(example.id);
        store.index_.add(example.id, example.embedding);
    }
    return store;
}

const ReferenceExample* ReferenceStore::find(std::string_view id) const {
    const auto it = by_id_.find(id);
    if (it == by_id_.end()) {
        return nullptr;
    }
    return &examples_[it->second];
}

ReferenceStore ReferenceStore::filter_sources(const std::vector<std::string>& sources) const {
    const std::set<std::string> keep(sources.begin(), sources.end());
    std::vector<ReferenceExample> kept;
    for (const ReferenceExample& example : examples_) {
        if (keep.count(example.source)) {
            kept.push_back(example);
        }
    }
    ReferenceStore filtered = from_examples(std::move(kept), embedder_identity_, llm_identity_);
    for (EmotionLabel label : all_labels()) {
        if (filtered.bucket(label).empty()) {
            throw StoreError("source filter leaves bucket \"" + std::string(label_name(label)) +
                             "\" empty");
        }
    }
    return filtered;
}

ReferenceStore build_reference_store(const std::vector<SplitSource>& splits,
                                     embedding::EmbedderBackend& embedder,
                                     const llm::LlmBackend& paraphraser,
                                     const FileCache* embedding_cache,
                                     const FileCache* paraphrase_cache, int workers,
                                     BuildStats* stats, const ParaphrasePrompt& prompt) {
    struct Pending {
        std::string id;
        std::string source;
        std::string text;
        EmotionLabel label = EmotionLabel::neutral;
    };
    std::vector<Pending> pending;
    for (const SplitSource& split_source : splits) {
        if (split_source.split == nullptr) {
            throw StoreError("build_reference_store: null split");
        }
        for (const corpus::Utterance* utterance : corpus::predictable_targets(*split_source.split)) {
            pending.push_back(Pending{split_source.source + ":" + utterance->id(),
                                      split_source.source, utterance->text_for("groundtruth"),
                                      *utterance->mapped_label});
        }
    }

    std::array<std::size_t, kLabelCount> class_counts{};
    for (const Pending& p : pending) {
        ++class_counts[static_cast<std::size_t>(label_index(p.label))];
    }
    for (EmotionLabel label : all_labels()) {
        if (class_counts[static_cast<std::size_t>(label_index(label))] == 0) {
            throw StoreError("reference data has no examples for label \"" +
                             std::string(label_name(label)) + "\"");
        }
    }

    std::vector<std::string> texts;
    texts.reserve(pending.size());
    for (const Pending& p : pending) {
        texts.push_back(p.text);
    }
    const auto vectors = embedding::embed_texts(embedder, texts, embedding_cache);

    // Paraphrase generation is the expensive leg; fan out over a bounded pool.
    std::vector<ParaphraseResult> paraphrases(pending.size());
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> cache_hits{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= pending.size()) {
                return;
            }
            try {
                bool was_cached = false;
                if (paraphrase_cache != nullptr && paraphrase_cache->enabled()) {
                    const std::string key = sha256_hex(paraphraser.identity() + "\x1e" +
                                                       "paraphrases" + "\x1e" + pending[i].text);
                    was_cached = paraphrase_cache->get(key).has_value();
                }
                paraphrases[i] =
                    generate_paraphrases(paraphraser, pending[i].text, paraphrase_cache, prompt);
                if (was_cached) {
                    cache_hits.fetch_add(1);
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
                next.store(pending.size());
                return;
            }
        }
    };
    const int pool = std::max(1, workers);
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(pool));
    for (int t = 0; t < pool; ++t) {
        threads.emplace_back(work);
    }
    for (std::thread& t : threads) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }

    std::vector<ReferenceExample> examples;
    examples.reserve(pending.size());
    std::size_t degraded = 0;
    for (std::size_t i = 0; i < pending.size(); ++i) {
        ReferenceExample example;
        example.id = pending[i].id;
        example.source = pending[i].source;
        example.text = pending[i].text;
        example.label = pending[i].label;
        example.paraphrases = paraphrases[i].paraphrases;
        example.embedding = vectors[i];
        if (paraphrases[i].degraded) {
            ++degraded;
        }
        examples.push_back(std::move(example));
    }

    ReferenceStore store = ReferenceStore::from_examples(std::move(examples), embedder.identity(),
                                                         paraphraser.identity());
    if (stats != nullptr) {
        stats->examples = store.examples().size();
        for (EmotionLabel label : all_labels()) {
            stats->bucket_sizes[static_cast<std::size_t>(label_index(label))] =
                store.bucket(label).size();
        }
        stats->degraded_paraphrases = degraded;
        stats->paraphrase_cache_hits = cache_hits.load();
    }
    return store;
}

namespace {

json example_to_json(const ReferenceExample& example) {
    json doc;
    doc["id"] = example.id;
    doc["source"] = example.source;
    doc["text"] = example.text;
    doc["label"] = std::string(label_name(example.label));
    doc["paraphrases"] = std::vector<std::string>(example.paraphrases.begin(),
                                                  example.paraphrases.end());
    doc["embedding"] = std::vector<float>(example.embedding.components().begin(),
                                          example.embedding.components().end());
    return doc;
}

ReferenceExample example_from_json(const json& doc) {
    ReferenceExample example;
    example.id = doc.at("id").get<std::string>();
    example.source = doc.at("source").get<std::string>();
    example.text = doc.at("text").get<std::string>();
    const auto label = label_from_name(doc.at("label").get<std::string>());
    if (!label) {
        throw StoreError("unknown label in store record: " + doc.at("label").get<std::string>());
    }
    example.label = *label;
    const auto items = doc.at("paraphrases").get<std::vector<std::string>>();
    if (items.size() != 4) {
        throw StoreError("example " + example.id + " has " + std::to_string(items.size()) +
                         " paraphrases, expected 4");
    }
    std::copy(items.begin(), items.end(), example.paraphrases.begin());
    example.embedding =
        embedding::EmbeddingVector::from_unit(doc.at("embedding").get<std::vector<float>>());
    return example;
}

}  // namespace

void save_store(const ReferenceStore& store, const std::filesystem::path& path) {
    std::string body;
    for (const ReferenceExample& example : store.examples()) {
        body += example_to_json(example).dump();
        body += '\n';
    }
    json header;
    header["version"] = kStoreVersion;
    header["embedder"] = store.embedder_identity();
    header["llm"] = store.llm_identity();
    header["count"] = store.examples().size();
    header["checksum"] = sha256_hex(body);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw StoreError("cannot write store file: " + path.string());
    }
    out << header.dump() << '\n' << body;
    if (!out) {
        throw StoreError("failed while writing store file: " + path.string());
    }
}

ReferenceStore load_store(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw StoreError("cannot open store file: " + path.string());
    }
    std::string header_line;
    if (!std::getline(in, header_line)) {
        throw StoreError("store file is empty: " + path.string());
    }
    json header;
    try {
        header = json::parse(header_line);
    } catch (const json::exception& e) {
        throw StoreError("store header is not valid JSON: " + std::string(e.what()));
    }
    const int version = header.value("version", -1);
    if (version != kStoreVersion) {
        throw StoreError("unsupported store version " + std::to_string(version) + " (expected " +
                         std::to_string(kStoreVersion) + ")");
    }

    std::string body;
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) {
            continue;
        }
        body += line;
        body += '\n';
        lines.push_back(std::move(line));
    }

    const auto expected_count = header.at("count").get<std::size_t>();
    const auto expected_checksum = header.at("checksum").get<std::string>();
    if (lines.size() != expected_count) {
        throw StoreError("store file is corrupted: header says " + std::to_string(expected_count) +
                         " records, found " + std::to_string(lines.size()));
    }
    if (sha256_hex(body) != expected_checksum) {
        throw StoreError("store file is corrupted: checksum mismatch");
    }

    std::vector<ReferenceExample> examples;
    examples.reserve(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
        try {
            examples.push_back(example_from_json(json::parse(lines[i])));
        } catch (const json::exception& e) {
            throw StoreError("store record " + std::to_string(i + 1) + " is malformed: " +
                             e.what());
        }
    }

    ReferenceStore store = ReferenceStore::from_examples(
        std::move(examples), header.at("embedder").get<std::string>(),
        header.at("llm").get<std::string>());
    for (EmotionLabel label : all_labels()) {
        if (store.bucket(label).empty()) {
            throw StoreError("loaded store has an empty bucket for label \"" +
                             std::string(label_name(label)) + "\"");
        }
    }
    return store;
}

}  // namespace cer::reference
