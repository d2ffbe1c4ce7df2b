#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace cer {

// The four-class scheme every dataset is normalized to. Declaration order is
// the tie-break order used by retrieval and voting.
enum class EmotionLabel : int { happy = 0, sad = 1, neutral = 2, angry = 3 };

inline constexpr std::size_t kLabelCount = 4;

constexpr std::array<EmotionLabel, kLabelCount> all_labels() {
    return {EmotionLabel::happy, EmotionLabel::sad, EmotionLabel::neutral, EmotionLabel::angry};
}

constexpr int label_index(EmotionLabel label) { return static_cast<int>(label); }

constexpr std::string_view label_name(EmotionLabel label) {
    switch (label) {
        case EmotionLabel::happy: return "happy";
        case EmotionLabel::sad: return "sad";
        case EmotionLabel::neutral: return "neutral";
        case EmotionLabel::angry: return "angry";
    }
    return "neutral";
}

constexpr std::optional<EmotionLabel> label_from_name(std::string_view name) {
    for (EmotionLabel label : all_labels()) {
        if (label_name(label) == name) {
            return label;
        }
    }
    return std::nullopt;
}

}  // namespace cer
