#include "cer/evaluation.hpp"

#include <cstdio>
#include <map>
#include <stdexcept>

#include "cer/report.hpp"

namespace cer::eval {

std::array<ClassMetrics, kLabelCount> per_class_metrics(const ConfusionMatrix& cm) {
    std::array<ClassMetrics, kLabelCount> out{};
    for (std::size_t i = 0; i < kLabelCount; ++i) {
        const std::uint64_t tp = cm.counts[i][i];
        std::uint64_t fp = 0;
        std::uint64_t fn = 0;
        for (std::size_t j = 0; j < kLabelCount; ++j) {
            if (j == i) {
                continue;
            }
            fp += cm.counts[j][i];
            fn += cm.counts[i][j];
        }
        ClassMetrics& m = out[i];
        m.label = all_labels()[i];
        m.support = tp + fn;
        m.precision = (tp + fp == 0) ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
        m.recall = (tp + fn == 0) ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
        m.f1 = (m.precision + m.recall == 0.0)
                   ? 0.0
                   : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    }
    return out;
}

double macro_f1(const ConfusionMatrix& cm) {
    const auto metrics = per_class_metrics(cm);
    double sum = 0.0;
    for (const ClassMetrics& m : metrics) {
        sum += m.f1;
    }
    return sum / static_cast<double>(kLabelCount);
}

std::string confusion_to_csv(const ConfusionMatrix& cm) {
    std::string out = "gold\\pred";
    for (EmotionLabel label : all_labels()) {
        out += ",";
        out += label_name(label);
    }
    out += "\n";
    for (std::size_t g = 0; g < kLabelCount; ++g) {
        out += label_name(all_labels()[g]);
        for (std::size_t p = 0; p < kLabelCount; ++p) {
            out += "," + std::to_string(cm.counts[g][p]);
        }
        out += "\n";
    }
    return out;
}

ReportDelta compare_reports(const engine::ExperimentReport& a, const engine::ExperimentReport& b) {
    if (a.dataset_path != b.dataset_path || a.scheme != b.scheme || a.variant != b.variant) {
        throw std::invalid_argument("compare_reports: reports cover different dataset/variant (" +
                                    a.dataset_path + "/" + a.variant + " vs " + b.dataset_path +
                                    "/" + b.variant + ")");
    }
    ReportDelta delta;
    const auto metrics_a = per_class_metrics(a.confusion);
    const auto metrics_b = per_class_metrics(b.confusion);
    for (std::size_t i = 0; i < kLabelCount; ++i) {
        delta.f1_delta[i] = metrics_b[i].f1 - metrics_a[i].f1;
    }
    delta.macro_f1_delta = macro_f1(b.confusion) - macro_f1(a.confusion);

    std::map<std::string, EmotionLabel> finals_a;
    for (const auto& record : a.records) {
        finals_a.emplace(record.target_id, record.final);
    }
    for (const auto& record : b.records) {
        const auto it = finals_a.find(record.target_id);
        if (it == finals_a.end()) {
            continue;
        }
        ++delta.shared_targets;
        if (it->second == record.final) {
            ++delta.agreeing_targets;
        }
    }
    delta.agreement_rate = delta.shared_targets == 0
                               ? 0.0
                               : static_cast<double>(delta.agreeing_targets) /
                                     static_cast<double>(delta.shared_targets);
    return delta;
}

std::string render_delta_table(const ReportDelta& delta) {
    char buf[128];
    std::string out = "class      f1_delta\n";
    for (std::size_t i = 0; i < kLabelCount; ++i) {
        std::snprintf(buf, sizeof(buf), "%-10s %+.6f\n",
                      std::string(label_name(all_labels()[i])).c_str(), delta.f1_delta[i]);
        out += buf;
    }
    std::snprintf(buf, sizeof(buf), "%-10s %+.6f\n", "macro", delta.macro_f1_delta);
    out += buf;
    std::snprintf(buf, sizeof(buf), "agreement  %.6f (%llu/%llu)\n", delta.agreement_rate,
                  static_cast<unsigned long long>(delta.agreeing_targets),
                  static_cast<unsigned long long>(delta.shared_targets));
    out += buf;
    return out;
}

}  // namespace cer::eval
