#include "cer/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

#include "cer/strings.hpp"

namespace cer::corpus {

using nlohmann::json;

const std::string& Utterance::text_for(const std::string& variant) const {
    auto it = texts.find(variant);
    if (it != texts.end()) {
        return it->second;
    }
    it = texts.find("groundtruth");
    if (it == texts.end()) {
        throw CorpusError("utterance " + id() + " has no groundtruth text");
    }
    return it->second;
}

LabelScheme::LabelScheme(std::string name, const std::map<std::string, EmotionLabel>& mapping)
    : name_(std::move(name)) {
    std::array<const char*, kLabelCount> taken{};
    for (const auto& [raw, label] : mapping) {
        const std::string key = to_lower(trim(raw));
        if (mapping_.count(key)) {
            throw CorpusError("scheme " + name_ + ": duplicate raw label '" + key + "'");
        }
        if (taken[static_cast<std::size_t>(label_index(label))] != nullptr) {
            throw CorpusError("scheme " + name_ + ": mapping is not injective, label '" +
                              std::string(label_name(label)) + "' has multiple raw labels");
        }
        taken[static_cast<std::size_t>(label_index(label))] = "x";
        mapping_[key] = label;
    }
}

LabelScheme LabelScheme::builtin(std::string_view name) {
    const std::string key = to_lower(trim(name));
    if (key == "meld") {
        return LabelScheme("meld", {{"Joy", EmotionLabel::happy},
                                    {"Sadness", EmotionLabel::sad},
                                    {"Neutral", EmotionLabel::neutral},
                                    {"Anger", EmotionLabel::angry}});
    }
    if (key == "emorynlp") {
        return LabelScheme("emorynlp", {{"joyful", EmotionLabel::happy},
                                        {"sad", EmotionLabel::sad},
                                        {"neutral", EmotionLabel::neutral},
                                        {"mad", EmotionLabel::angry}});
    }
    if (key == "iemocap") {
        return LabelScheme("iemocap", {{"happy", EmotionLabel::happy},
                                       {"sad", EmotionLabel::sad},
                                       {"neutral", EmotionLabel::neutral},
                                       {"angry", EmotionLabel::angry}});
    }
    throw CorpusError("unknown builtin label scheme: " + std::string(name));
}

LabelScheme LabelScheme::from_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw CorpusError("cannot open scheme file: " + path.string());
    }
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw CorpusError("scheme file " + path.string() + ": " + e.what());
    }
    if (!doc.is_object() || !doc.contains("name") || !doc.contains("mapping") ||
        !doc["mapping"].is_object()) {
        throw CorpusError("scheme file " + path.string() +
                          ": expected {\"name\": ..., \"mapping\": {raw: label}}");
    }
    std::map<std::string, EmotionLabel> mapping;
    for (const auto& [raw, value] : doc["mapping"].items()) {
        const auto label = label_from_name(value.get<std::string>());
        if (!label) {
            throw CorpusError("scheme file " + path.string() + ": unknown target label '" +
                              value.get<std::string>() + "' for raw label '" + raw + "'");
        }
        mapping[raw] = *label;
    }
    return LabelScheme(doc["name"].get<std::string>(), mapping);
}

LabelScheme LabelScheme::resolve(const std::string& name_or_path) {
    const std::string key = to_lower(trim(name_or_path));
    if (key == "meld" || key == "emorynlp" || key == "iemocap") {
        return builtin(key);
    }
    return from_json_file(name_or_path);
}

std::optional<EmotionLabel> LabelScheme::map(std::string_view raw) const {
    const auto it = mapping_.find(to_lower(trim(raw)));
    if (it == mapping_.end()) {
        return std::nullopt;
    }
    return it->second;
}

const Utterance* DatasetSplit::find(std::string_view conversation_id, int turn_index) const {
    const auto it = std::lower_bound(
        conversations.begin(), conversations.end(), conversation_id,
        [](const Conversation& c, std::string_view id) { return c.id < id; });
    if (it == conversations.end() || it->id != conversation_id) {
        return nullptr;
    }
    if (turn_index < 0 || static_cast<std::size_t>(turn_index) >= it->turns.size()) {
        return nullptr;
    }
    return &it->turns[static_cast<std::size_t>(turn_index)];
}

std::size_t DatasetSplit::utterance_count() const {
    std::size_t n = 0;
    for (const auto& conversation : conversations) {
        n += conversation.turns.size();
    }
    return n;
}

namespace {

[[noreturn]] void record_error(const std::filesystem::path& path, std::size_t line_no,
                               const std::string& what) {
    throw CorpusError(path.string() + ":" + std::to_string(line_no) + ": " + what);
}

Utterance parse_record(const json& doc, const LabelScheme& scheme,
                       const std::filesystem::path& path, std::size_t line_no) {
    if (!doc.is_object()) {
        record_error(path, line_no, "record is not a JSON object");
    }
    Utterance utt;
    try {
        utt.conversation_id = doc.at("conversation_id").get<std::string>();
        utt.turn_index = doc.at("turn_index").get<int>();
        utt.speaker = doc.at("speaker").get<std::string>();
        const json& texts = doc.at("texts");
        if (!texts.is_object()) {
            record_error(path, line_no, "\"texts\" must be an object of variant -> text");
        }
        for (const auto& [variant, text] : texts.items()) {
            utt.texts[variant] = text.get<std::string>();
        }
        if (doc.contains("raw_label") && !doc["raw_label"].is_null()) {
            utt.raw_label = doc["raw_label"].get<std::string>();
        }
    } catch (const json::exception& e) {
        record_error(path, line_no, std::string("malformed record: ") + e.what());
    }
    if (utt.turn_index < 0) {
        record_error(path, line_no, "turn_index must be nonnegative");
    }
    if (!utt.texts.count("groundtruth")) {
        record_error(path, line_no, "missing \"groundtruth\" text");
    }
    for (const auto& [variant, text] : utt.texts) {
        if (trim(text).empty()) {
            record_error(path, line_no, "empty text for variant \"" + variant + "\"");
        }
    }
    if (utt.raw_label) {
        utt.mapped_label = scheme.map(*utt.raw_label);
    }
    return utt;
}

}  // namespace

DatasetSplit load_dataset(const std::filesystem::path& path, const LabelScheme& scheme) {
    std::ifstream in(path);
    if (!in) {
        throw CorpusError("cannot open dataset file: " + path.string());
    }

    std::map<std::string, std::vector<Utterance>> by_conversation;
    std::set<std::pair<std::string, int>> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        json doc;
        try {
            doc = json::parse(line);
        } catch (const json::exception& e) {
            record_error(path, line_no, std::string("invalid JSON: ") + e.what());
        }
        Utterance utt = parse_record(doc, scheme, path, line_no);
        if (!seen.emplace(utt.conversation_id, utt.turn_index).second) {
            record_error(path, line_no,
                         "duplicate (conversation_id, turn_index): (" + utt.conversation_id +
                             ", " + std::to_string(utt.turn_index) + ")");
        }
        by_conversation[utt.conversation_id].push_back(std::move(utt));
    }

    DatasetSplit split;
    split.name = path.filename().string();
    split.scheme_name = scheme.name();
    for (auto& [conversation_id, turns] : by_conversation) {
        std::sort(turns.begin(), turns.end(),
                  [](const Utterance& a, const Utterance& b) { return a.turn_index < b.turn_index; });
        for (std::size_t i = 0; i < turns.size(); ++i) {
            if (turns[i].turn_index != static_cast<int>(i)) {
                throw CorpusError(path.string() + ": conversation \"" + conversation_id +
                                  "\" has non-contiguous turn_index values (expected " +
                                  std::to_string(i) + ", found " +
                                  std::to_string(turns[i].turn_index) + ")");
            }
        }
        split.conversations.push_back(Conversation{conversation_id, std::move(turns)});
    }
    return split;
}

std::optional<EmotionLabel> map_raw_label(std::string_view raw, const LabelScheme& scheme) {
    return scheme.map(raw);
}

std::vector<const Utterance*> predictable_targets(const DatasetSplit& split) {
    std::vector<const Utterance*> targets;
    for (const auto& conversation : split.conversations) {
        for (const auto& utterance : conversation.turns) {
            if (utterance.mapped_label) {
                targets.push_back(&utterance);
            }
        }
    }
    return targets;
}

std::vector<std::pair<std::string, std::string>> context_window(const DatasetSplit& split,
                                                                const Utterance& target, int k,
                                                                const std::string& variant) {
    if (k < 0) {
        throw CorpusError("context size must be nonnegative");
    }
    const Utterance* found = split.find(target.conversation_id, target.turn_index);
    if (found == nullptr || *found != target) {
        throw CorpusError("target " + target.id() + " not found in split");
    }
    const auto it = std::lower_bound(
        split.conversations.begin(), split.conversations.end(), target.conversation_id,
        [](const Conversation& c, const std::string& id) { return c.id < id; });
    const std::vector<Utterance>& turns = it->turns;

    const int first = std::max(0, target.turn_index - k);
    std::vector<std::pair<std::string, std::string>> window;
    window.reserve(static_cast<std::size_t>(target.turn_index - first));
    for (int i = first; i < target.turn_index; ++i) {
        const Utterance& u = turns[static_cast<std::size_t>(i)];
        window.emplace_back(u.speaker, u.text_for(variant));
    }
    return window;
}

}  // namespace cer::corpus
