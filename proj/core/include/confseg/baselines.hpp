#pragma once

#include "confseg/calibration.hpp"
#include "confseg/mask.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace confseg {

class SegmentationModel;

/// Single best parameter value: the grid index whose success set covers the
/// most calibration points. Stands in for a parameter-selection procedure
/// that must commit to one value.
struct SingleParamBaseline {
    std::size_t best_index = 0;
    double calib_coverage = 0.0; // |S_best| / n
};

SingleParamBaseline best_single_parameter(const SuccessSets& ss);

/// Dilation baseline: predictions at a fixed base grid index, expanded by a
/// margin d_hat calibrated so that the dilated mask contains the truth on a
/// `quantile_level` fraction of calibration points.
struct DilationBaseline {
    std::size_t base_index = 0;
    std::uint32_t d_hat = 0;
    double quantile_level = 0.0;
};

/// Per calibration point, finds the smallest D in [0, d_max] at which the
/// dilated base prediction contains the truth; points with no such D (or with
/// an absent prediction) are censored at d_max + 1. d_hat is the
/// empirical_quantile of these minima at `level`. Throws InfeasibleError when
/// the quantile itself lands on the censoring sentinel.
DilationBaseline calibrate_dilation(const SegmentationModel& model, std::size_t base_index,
                                    std::span<const BinaryMask> truths, double level,
                                    std::uint32_t d_max);

/// The per-point minima described above; exposed for the calibration
/// coverage count check.
std::vector<std::uint32_t> dilation_minima(const SegmentationModel& model,
                                           std::size_t base_index,
                                           std::span<const BinaryMask> truths,
                                           std::uint32_t d_max);

/// Base prediction dilated by d_hat; absent when the model yields no mask.
std::optional<BinaryMask> predict_dilation(const DilationBaseline& baseline,
                                           const SegmentationModel& model, std::size_t query);

} // namespace confseg
