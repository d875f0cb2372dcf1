#pragma once

#include <cstddef>
#include <vector>

namespace unleak {

/// One evaluated sample: true membership status plus the confidences of the
/// two-posterior attack (p_u) and the classical baseline (p_m).
struct EvalRecord {
    bool is_member = false;
    double p_attack = 0.0;    // p_u
    double p_baseline = 0.0;  // p_m
};

struct MetricsReport {
    double auc_ours = 0.0;
    double auc_baseline = 0.0;
    double deg_count = 0.0;
    double deg_rate = 0.0;
    std::size_t n = 0;
};

/// Probability that a uniformly random positive outranks a uniformly random
/// negative; ties count 0.5. Exact rank statistic, no curve approximation.
/// Throws DataError unless both labels are present.
double auc(const std::vector<double>& scores, const std::vector<bool>& labels);

/// Fraction of records where the attack is strictly more confident than the
/// baseline in the true membership status. Ties contribute 0.
double deg_count(const std::vector<EvalRecord>& records);

/// Mean signed confidence improvement of the attack over the baseline on the
/// true membership status. In [-1, 1].
double deg_rate(const std::vector<EvalRecord>& records);

/// Bundles the four metrics of one evaluation.
MetricsReport evaluate_records(const std::vector<EvalRecord>& records);

}  // namespace unleak
