#pragma once

#include "confseg/baselines.hpp"
#include "confseg/conformal.hpp"
#include "confseg/crc.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace confseg {

enum class Comparison { kGreater, kGreaterEqual };

struct QueryRow {
    std::string id;
    double max_iou = 0.0;
    std::size_t set_size = 0;
    bool covered = false;
};

struct SingleParamBlock {
    std::size_t best_index = 0;
    std::vector<double> point;
    double calib_coverage = 0.0;
    double test_coverage = 0.0;
};

struct DilationBlock {
    std::size_t base_index = 0;
    std::vector<double> point;
    std::uint32_t d_hat = 0;
    double level = 0.0;
    double calib_containment = 0.0;
    double test_coverage = 0.0;
};

/// Plot-ready evaluation summary: coverage against the active threshold,
/// set-size distribution, one row per test query, and optional baseline
/// blocks filled in by the baseline runner.
struct EvaluationReport {
    ConformalConfig config;
    std::string selector_kind;       // "setcover" or "crc"
    std::optional<double> theta_tilde;
    std::optional<std::size_t> lambda_hat;
    double threshold = 0.0;
    Comparison comparison = Comparison::kGreater;
    double empirical_coverage = 0.0;
    double mean_set_size = 0.0;
    std::map<std::size_t, std::size_t> set_size_histogram;
    std::vector<QueryRow> rows;
    std::optional<SingleParamBlock> single_param;
    std::optional<DilationBlock> dilation;
};

/// Scores the selector on held-out queries. Coverage compares the best IoU of
/// the deduplicated set against theta_tilde with >= when re-calibration has
/// run, and against tau with strict > otherwise; `threshold_override`
/// replaces the threshold value but keeps the comparison mode. Non-empty
/// `test_ids` are checked for overlap against the selector's calibration ids.
EvaluationReport evaluate(const CalibratedSelector& sel, const SegmentationModel& test_model,
                          std::span<const BinaryMask> test_truths,
                          std::span<const std::string> test_ids,
                          std::optional<double> threshold_override = std::nullopt);

/// CRC variant: coverage is always best IoU strictly above tau.
EvaluationReport evaluate(const CrcSelector& sel, const SegmentationModel& test_model,
                          std::span<const BinaryMask> test_truths,
                          std::span<const std::string> test_ids,
                          std::optional<double> threshold_override = std::nullopt);

} // namespace confseg
