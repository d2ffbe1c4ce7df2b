#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cer/label.hpp"

namespace cer::corpus {

struct CorpusError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One conversation turn. `texts` always carries the "groundtruth" transcript
// and may carry any number of ASR-variant transcripts keyed by variant name.
struct Utterance {
    std::string conversation_id;
    int turn_index = 0;
    std::string speaker;
    std::map<std::string, std::string> texts;
    std::optional<std::string> raw_label;
    std::optional<EmotionLabel> mapped_label;

    std::string id() const { return conversation_id + ":" + std::to_string(turn_index); }

    // Requested variant, falling back to "groundtruth" when absent.
    const std::string& text_for(const std::string& variant) const;

    bool operator==(const Utterance&) const = default;
};

struct Conversation {
    std::string id;
    std::vector<Utterance> turns;  // dense, ordered by turn_index

    bool operator==(const Conversation&) const = default;
};

// Case-insensitive raw-label -> four-class mapping. Lookups of unmapped raw
// labels return nullopt, never error.
class LabelScheme {
public:
    LabelScheme(std::string name, const std::map<std::string, EmotionLabel>& mapping);

    // Shipped defaults: "meld", "emorynlp", "iemocap".
    static LabelScheme builtin(std::string_view name);
    static LabelScheme from_json_file(const std::filesystem::path& path);
    // `name` resolves to a builtin first, then to a JSON scheme file path.
    static LabelScheme resolve(const std::string& name_or_path);

    const std::string& name() const { return name_; }
    std::optional<EmotionLabel> map(std::string_view raw) const;

private:
    std::string name_;
    std::map<std::string, EmotionLabel> mapping_;  // keys lowercased + trimmed
};

struct DatasetSplit {
    std::string name;
    std::string scheme_name;
    std::vector<Conversation> conversations;  // sorted by conversation_id

    const Utterance* find(std::string_view conversation_id, int turn_index) const;
    std::size_t utterance_count() const;

    bool operator==(const DatasetSplit&) const = default;
};

// Reads the canonical line-delimited dataset file (one JSON record per line)
// and maps labels under `scheme`. Malformed records, duplicate
// (conversation_id, turn_index) pairs, and missing "groundtruth" texts are
// reported with their line number.
DatasetSplit load_dataset(const std::filesystem::path& path, const LabelScheme& scheme);

std::optional<EmotionLabel> map_raw_label(std::string_view raw, const LabelScheme& scheme);

// Utterances with a mapped label, in split order. Everything else stays in
// the split and is served as conversation context only.
std::vector<const Utterance*> predictable_targets(const DatasetSplit& split);

// The min(k, turn_index) utterances immediately preceding `target` in its
// conversation, oldest first, as (speaker, variant text) pairs.
std::vector<std::pair<std::string, std::string>> context_window(const DatasetSplit& split,
                                                                const Utterance& target, int k,
                                                                const std::string& variant);

}  // namespace cer::corpus
