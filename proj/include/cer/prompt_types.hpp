#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace cer {

// ZeroShot is ZeroShotContext with context size 0; the engine enforces that.
enum class PromptStrategy { ZeroShot, ZeroShotContext, IclRandom, IclAer };

constexpr std::string_view strategy_name(PromptStrategy s) {
    switch (s) {
        case PromptStrategy::ZeroShot: return "zero_shot";
        case PromptStrategy::ZeroShotContext: return "zero_shot_context";
        case PromptStrategy::IclRandom: return "icl_random";
        case PromptStrategy::IclAer: return "icl_aer";
    }
    return "zero_shot";
}

constexpr std::optional<PromptStrategy> strategy_from_name(std::string_view name) {
    for (PromptStrategy s : {PromptStrategy::ZeroShot, PromptStrategy::ZeroShotContext,
                             PromptStrategy::IclRandom, PromptStrategy::IclAer}) {
        if (strategy_name(s) == name) {
            return s;
        }
    }
    return std::nullopt;
}

constexpr bool is_icl(PromptStrategy s) {
    return s == PromptStrategy::IclRandom || s == PromptStrategy::IclAer;
}

// Rendering is a pure function of its inputs; identical inputs give identical
// bytes. round_index is 0 for every non-AER strategy.
struct RenderedPrompt {
    std::string system_text;
    std::string user_text;
    PromptStrategy strategy = PromptStrategy::ZeroShot;
    int round_index = 0;

    bool operator==(const RenderedPrompt&) const = default;
};

}  // namespace cer
