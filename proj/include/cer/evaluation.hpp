#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "cer/label.hpp"

namespace cer::engine {
struct ExperimentReport;
}

namespace cer::eval {

// 4x4 gold-vs-predicted counts; rows are gold, columns are predicted, both in
// label declaration order. Value type: partial matrices merge by addition.
struct ConfusionMatrix {
    std::array<std::array<std::uint64_t, kLabelCount>, kLabelCount> counts{};

    void add(EmotionLabel gold, EmotionLabel pred) {
        ++counts[static_cast<std::size_t>(label_index(gold))]
                [static_cast<std::size_t>(label_index(pred))];
    }

    ConfusionMatrix& operator+=(const ConfusionMatrix& other) {
        for (std::size_t g = 0; g < kLabelCount; ++g) {
            for (std::size_t p = 0; p < kLabelCount; ++p) {
                counts[g][p] += other.counts[g][p];
            }
        }
        return *this;
    }

    std::uint64_t total() const {
        std::uint64_t n = 0;
        for (const auto& row : counts) {
            for (std::uint64_t c : row) {
                n += c;
            }
        }
        return n;
    }

    bool operator==(const ConfusionMatrix&) const = default;
};

struct ClassMetrics {
    EmotionLabel label = EmotionLabel::happy;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::uint64_t support = 0;
};

// Zero-denominator convention: precision, recall, and f1 are 0 when their
// denominator is 0; classes are never excluded.
std::array<ClassMetrics, kLabelCount> per_class_metrics(const ConfusionMatrix& cm);

// Unweighted mean of the four per-class F1 values; always divides by 4.
double macro_f1(const ConfusionMatrix& cm);

// 4x4 comma-separated grid with a label-order header row/column.
std::string confusion_to_csv(const ConfusionMatrix& cm);

struct ReportDelta {
    std::array<double, kLabelCount> f1_delta{};  // b - a
    double macro_f1_delta = 0.0;
    double agreement_rate = 0.0;  // share of shared targets with equal final label
    std::uint64_t shared_targets = 0;
    std::uint64_t agreeing_targets = 0;
};

// Per-class and macro F1 deltas plus per-target agreement between two reports
// over the same dataset + variant. Throws std::invalid_argument otherwise.
ReportDelta compare_reports(const engine::ExperimentReport& a, const engine::ExperimentReport& b);

std::string render_delta_table(const ReportDelta& delta);

}  // namespace cer::eval
