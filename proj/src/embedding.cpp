#include "cer/embedding.hpp"

#include <algorithm>
#include <cmath>

#include <httplib.h>
#include <json.hpp>

#include "cer/hashing.hpp"
#include "cer/rng.hpp"
#include "cer/strings.hpp"

namespace cer::embedding {

using nlohmann::json;

EmbeddingVector EmbeddingVector::normalized(std::vector<float> raw) {
    if (raw.empty()) {
        throw EmbeddingError("cannot normalize an empty vector");
    }
    double sq = 0.0;
    for (float c : raw) {
        sq += static_cast<double>(c) * static_cast<double>(c);
    }
    const double norm = std::sqrt(sq);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw EmbeddingError("cannot normalize a zero or non-finite vector");
    }
    for (float& c : raw) {
        c = static_cast<float>(static_cast<double>(c) / norm);
    }
    return EmbeddingVector(std::move(raw));
}

EmbeddingVector EmbeddingVector::from_unit(std::vector<float> components) {
    double sq = 0.0;
    for (float c : components) {
        sq += static_cast<double>(c) * static_cast<double>(c);
    }
    const double norm = std::sqrt(sq);
    if (std::abs(norm - 1.0) > kUnitNormTolerance) {
        throw EmbeddingError("vector is not unit-normalized (norm = " + std::to_string(norm) + ")");
    }
    return EmbeddingVector(std::move(components));
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dimension() != b.dimension()) {
        throw EmbeddingError("cosine_similarity: dimension mismatch");
    }
    const auto av = a.components();
    const auto bv = b.components();
    double dot = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) {
        dot += static_cast<double>(av[i]) * static_cast<double>(bv[i]);
    }
    return std::clamp(dot, -1.0, 1.0);
}

void EmbeddingIndex::add(std::string example_id, EmbeddingVector vector) {
    if (vector.dimension() != dimension_) {
        throw EmbeddingError("index expects dimension " + std::to_string(dimension_) +
                             ", got " + std::to_string(vector.dimension()));
    }
    if (!ids_.insert(example_id).second) {
        throw EmbeddingError("duplicate example_id in index: " + example_id);
    }
    entries_.emplace_back(std::move(example_id), std::move(vector));
}

SearchHit EmbeddingIndex::top1(const EmbeddingVector& query) const {
    if (entries_.empty()) {
        throw EmbeddingError("top1 on an empty index");
    }
    std::size_t best = 0;
    double best_score = cosine_similarity(query, entries_[0].second);
    for (std::size_t i = 1; i < entries_.size(); ++i) {
        const double score = cosine_similarity(query, entries_[i].second);
        if (score > best_score) {
            best_score = score;
            best = i;
        }
    }
    return SearchHit{entries_[best].first, best_score};
}

std::vector<SearchHit> EmbeddingIndex::topk(const EmbeddingVector& query, std::size_t k) const {
    if (k == 0) {
        throw EmbeddingError("topk with k = 0");
    }
    if (entries_.empty()) {
        throw EmbeddingError("topk on an empty index");
    }
    std::vector<SearchHit> hits;
    hits.reserve(entries_.size());
    for (const auto& [id, vector] : entries_) {
        hits.push_back(SearchHit{id, cosine_similarity(query, vector)});
    }
    std::stable_sort(hits.begin(), hits.end(),
                     [](const SearchHit& a, const SearchHit& b) { return a.score > b.score; });
    if (hits.size() > k) {
        hits.resize(k);
    }
    return hits;
}

std::string MockEmbedder::identity() const {
    return "mock-embedder/seed=" + std::to_string(seed_) + "/dim=" + std::to_string(dimension_);
}

std::vector<std::vector<float>> MockEmbedder::embed_batch(const std::vector<std::string>& texts) {
    std::vector<std::vector<float>> out;
    out.reserve(texts.size());
    for (const std::string& text : texts) {
        SeededRng rng(derive_seed(seed_, text));
        std::vector<float> v(static_cast<std::size_t>(dimension_));
        for (float& c : v) {
            c = static_cast<float>(rng.next_gaussian());
        }
        out.push_back(std::move(v));
    }
    return out;
}

namespace {

// Splits "http://host:port/path" into client origin and path.
std::pair<std::string, std::string> split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    const std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    const auto path_start = url.find('/', host_start);
    if (path_start == std::string::npos) {
        return {url, "/"};
    }
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

HttpEmbedder::HttpEmbedder(std::string url, std::string model, int dimension, int retry_budget)
    : url_(std::move(url)), model_(std::move(model)), dimension_(dimension),
      retry_budget_(retry_budget) {}

std::string HttpEmbedder::identity() const { return url_ + "|" + model_; }

std::vector<std::vector<float>> HttpEmbedder::embed_batch(const std::vector<std::string>& texts) {
    const auto [origin, path] = split_url(url_);
    json body;
    body["model"] = model_;
    body["input"] = texts;
    const std::string payload = body.dump();

    std::string last_error;
    for (int attempt = 0; attempt <= retry_budget_; ++attempt) {
        httplib::Client client(origin);
        client.set_read_timeout(120, 0);
        client.set_connection_timeout(10, 0);
        auto res = client.Post(path, payload, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
        } else if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
        } else if (res->status != 200) {
            throw EmbeddingError("embedding endpoint returned HTTP " +
                                 std::to_string(res->status) + ": " + res->body);
        } else {
            json doc;
            try {
                doc = json::parse(res->body);
            } catch (const json::exception& e) {
                throw EmbeddingError(std::string("malformed embedding response: ") + e.what());
            }
            if (!doc.contains("data") || !doc["data"].is_array() ||
                doc["data"].size() != texts.size()) {
                throw EmbeddingError("malformed embedding response: bad \"data\" array");
            }
            std::vector<std::vector<float>> out(texts.size());
            for (const auto& item : doc["data"]) {
                const auto index = item.at("index").get<std::size_t>();
                if (index >= out.size()) {
                    throw EmbeddingError("malformed embedding response: index out of range");
                }
                out[index] = item.at("embedding").get<std::vector<float>>();
            }
            return out;
        }
    }
    throw EmbeddingTransportError("embedding backend failed after " +
                                  std::to_string(retry_budget_ + 1) + " attempts: " + last_error);
}

std::vector<EmbeddingVector> embed_texts(EmbedderBackend& backend,
                                         const std::vector<std::string>& texts,
                                         const FileCache* cache) {
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (trim(texts[i]).empty()) {
            throw EmbeddingError("embed_texts: text " + std::to_string(i) +
                                 " is empty after trimming");
        }
    }

    const std::string identity = backend.identity();
    std::vector<std::optional<EmbeddingVector>> results(texts.size());
    std::vector<std::size_t> misses;
    std::vector<std::string> cache_keys(texts.size());

    for (std::size_t i = 0; i < texts.size(); ++i) {
        cache_keys[i] = sha256_hex(identity + "\x1e" + texts[i]);
        if (cache != nullptr && cache->enabled()) {
            if (const auto hit = cache->get(cache_keys[i])) {
                try {
                    const json doc = json::parse(*hit);
                    results[i] = EmbeddingVector::from_unit(doc.at("v").get<std::vector<float>>());
                    continue;
                } catch (const std::exception&) {
                    // Unreadable cache entry: fall through and recompute.
                }
            }
        }
        misses.push_back(i);
    }

    constexpr std::size_t kBatchSize = 128;
    for (std::size_t start = 0; start < misses.size(); start += kBatchSize) {
        const std::size_t end = std::min(misses.size(), start + kBatchSize);
        std::vector<std::string> chunk;
        chunk.reserve(end - start);
        for (std::size_t j = start; j < end; ++j) {
            chunk.push_back(texts[misses[j]]);
        }
        auto raw = backend.embed_batch(chunk);
        if (raw.size() != chunk.size()) {
            throw EmbeddingError("backend returned " + std::to_string(raw.size()) +
                                 " vectors for " + std::to_string(chunk.size()) + " texts");
        }
        for (std::size_t j = start; j < end; ++j) {
            auto& vec = raw[j - start];
            if (static_cast<int>(vec.size()) != backend.dimension()) {
                throw EmbeddingError("backend \"" + identity + "\" returned dimension " +
                                     std::to_string(vec.size()) + ", configured " +
                                     std::to_string(backend.dimension()));
            }
            const std::size_t i = misses[j];
            results[i] = EmbeddingVector::normalized(std::move(vec));
            if (cache != nullptr && cache->enabled()) {
                json doc;
                doc["v"] = std::vector<float>(results[i]->components().begin(),
                                              results[i]->components().end());
                cache->put(cache_keys[i], doc.dump());
            }
        }
    }

    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (auto& r : results) {
        out.push_back(std::move(*r));
    }
    return out;
}

}  // namespace cer::embedding
