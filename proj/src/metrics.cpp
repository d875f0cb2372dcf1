#include "unleak/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "unleak/errors.hpp"

namespace unleak {

double auc(const std::vector<double>& scores, const std::vector<bool>& labels) {
    if (scores.size() != labels.size()) throw DataError("scores and labels disagree in length");
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (bool b : labels) n_pos += b ? 1 : 0;
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) throw DataError("auc needs both labels present");

    // Mann-Whitney rank statistic with midranks over tied score groups.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        // ranks i+1 .. j, shared midrank
        const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t t = i; t < j; ++t)
            if (labels[order[t]]) pos_rank_sum += midrank;
        i = j;
    }
    const double u = pos_rank_sum - static_cast<double>(n_pos) *
                                        (static_cast<double>(n_pos) + 1.0) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double deg_count(const std::vector<EvalRecord>& records) {
    if (records.empty()) throw DataError("deg_count over an empty record set");
    double sum = 0.0;
    for (const auto& r : records) {
        if (r.is_member)
            sum += r.p_attack > r.p_baseline ? 1.0 : 0.0;
        else
            sum += r.p_attack < r.p_baseline ? 1.0 : 0.0;
    }
    return sum / static_cast<double>(records.size());
}

double deg_rate(const std::vector<EvalRecord>& records) {
    if (records.empty()) throw DataError("deg_rate over an empty record set");
    double sum = 0.0;
    for (const auto& r : records)
        sum += r.is_member ? r.p_attack - r.p_baseline : r.p_baseline - r.p_attack;
    return sum / static_cast<double>(records.size());
}

MetricsReport evaluate_records(const std::vector<EvalRecord>& records) {
    MetricsReport report;
    report.n = records.size();
    std::vector<double> ours, base;
    std::vector<bool> labels;
    ours.reserve(records.size());
    base.reserve(records.size());
    labels.reserve(records.size());
    for (const auto& r : records) {
        ours.push_back(r.p_attack);
        base.push_back(r.p_baseline);
        labels.push_back(r.is_member);
    }
    report.auc_ours = auc(ours, labels);
    report.auc_baseline = auc(base, labels);
    report.deg_count = deg_count(records);
    report.deg_rate = deg_rate(records);
    return report;
}

}  // namespace unleak
