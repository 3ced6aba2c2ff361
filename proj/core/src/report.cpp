#include "confseg/report.hpp"

#include "confseg/errors.hpp"
#include "confseg/model.hpp"

#include <algorithm>
#include <unordered_set>

namespace confseg {

namespace {

void check_disjoint(std::span<const std::string> calib_ids, std::span<const std::string> test_ids) {
    if (calib_ids.empty() || test_ids.empty()) {
        return;
    }
    std::unordered_set<std::string> seen(calib_ids.begin(), calib_ids.end());
    for (const std::string& id : test_ids) {
        if (seen.count(id) > 0) {
            throw Error("evaluate: test query '" + id + "' also appears in the calibration set");
        }
    }
}

template <typename PredictFn>
EvaluationReport run_eval(PredictFn&& predict_fn, const ConformalConfig& config,
                          std::span<const BinaryMask> test_truths,
                          std::span<const std::string> test_ids, double threshold,
                          Comparison comparison) {
    if (test_truths.empty()) {
        throw Error("evaluate: no test data");
    }
    EvaluationReport report;
    report.config = config;
    report.threshold = threshold;
    report.comparison = comparison;

    std::size_t covered_count = 0;
    std::size_t size_total = 0;
    for (std::size_t i = 0; i < test_truths.size(); ++i) {
        const PredictionSet set = predict_fn(i);
        QueryRow row;
        row.id = i < test_ids.size() ? test_ids[i] : std::to_string(i);
        row.set_size = set.size();
        row.max_iou = best_iou(set, test_truths[i]);
        row.covered = comparison == Comparison::kGreaterEqual ? row.max_iou >= threshold
                                                              : row.max_iou > threshold;
        covered_count += row.covered ? 1 : 0;
        size_total += row.set_size;
        report.set_size_histogram[row.set_size] += 1;
        report.rows.push_back(std::move(row));
    }
    report.empirical_coverage =
        static_cast<double>(covered_count) / static_cast<double>(test_truths.size());
    report.mean_set_size =
        static_cast<double>(size_total) / static_cast<double>(test_truths.size());
    return report;
}

} // namespace

EvaluationReport evaluate(const CalibratedSelector& sel, const SegmentationModel& test_model,
                          std::span<const BinaryMask> test_truths,
                          std::span<const std::string> test_ids,
                          std::optional<double> threshold_override) {
    check_disjoint(sel.calibration_ids, test_ids);
    const bool recalibrated = sel.theta_tilde.has_value();
    const double threshold =
        threshold_override.value_or(recalibrated ? *sel.theta_tilde : sel.config.tau);
    const Comparison cmp = recalibrated ? Comparison::kGreaterEqual : Comparison::kGreater;
    EvaluationReport report = run_eval(
        [&](std::size_t i) { return predict(sel, test_model, i); }, sel.config, test_truths,
        test_ids, threshold, cmp);
    report.selector_kind = "setcover";
    report.theta_tilde = sel.theta_tilde;
    return report;
}

EvaluationReport evaluate(const CrcSelector& sel, const SegmentationModel& test_model,
                          std::span<const BinaryMask> test_truths,
                          std::span<const std::string> test_ids,
                          std::optional<double> threshold_override) {
    check_disjoint(sel.calibration_ids, test_ids);
    const double threshold = threshold_override.value_or(sel.config.tau);
    EvaluationReport report = run_eval(
        [&](std::size_t i) { return predict_crc(sel, test_model, i); }, sel.config, test_truths,
        test_ids, threshold, Comparison::kGreater);
    report.selector_kind = "crc";
    report.lambda_hat = sel.lambda_hat;
    return report;
}

} // namespace confseg
