#pragma once

#include "confseg/bitset.hpp"
#include "confseg/mask.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace confseg {

class SegmentationModel;

/// Explicit grid of tunable-parameter points. Each point is a tuple of
/// coordinates, which covers both scalar thresholds and multi-parameter
/// families such as (mask index, probability threshold). The construction
/// order is fixed and doubles as the tie-break base everywhere downstream.
class ParameterGrid {
public:
    ParameterGrid() = default;
    explicit ParameterGrid(std::vector<std::vector<double>> points);
    ParameterGrid(std::initializer_list<std::vector<double>> points)
        : ParameterGrid(std::vector<std::vector<double>>(points)) {}

    /// Evenly spaced scalar grid: `count` points from lo to hi inclusive.
    static ParameterGrid linear(double lo, double hi, std::size_t count);

    std::size_t size() const { return points_.size(); }
    const std::vector<std::vector<double>>& points() const { return points_; }
    const std::vector<double>& point(std::size_t j) const { return points_[j]; }

    /// Order-sensitive digest of the grid values; selectors carry it so a
    /// reloaded selector can only be applied to a model with the same grid.
    std::string fingerprint() const;

    bool operator==(const ParameterGrid&) const = default;

private:
    std::vector<std::vector<double>> points_;
};

/// Calibration-point x grid matrix of IoU scores.
struct IoUMatrix {
    std::size_t n = 0;
    std::size_t k = 0;
    std::vector<double> scores; // row-major n x k

    double at(std::size_t i, std::size_t j) const { return scores[i * k + j]; }
};

/// Per-parameter success sets: sets[j] holds the calibration indices where
/// grid point j scored strictly above tau.
struct SuccessSets {
    double tau = 0.0;
    std::size_t n = 0;
    std::vector<Bitset> sets;
};

struct FeasibilityReport {
    double alpha = 0.0;
    double tau = 0.0;
    std::size_t max_coverable = 0;       // |union of all success sets|
    std::size_t required = 0;            // coverage target in points
    bool feasible = false;
    double best_single_coverage = 0.0;   // max_j |S_j| / n
};

/// Integer coverage target ceil((1 - alpha) * n), with an epsilon guard so
/// that exactly-integer products do not get bumped by floating-point noise.
std::size_t coverage_target(double alpha, std::size_t n);

/// Evaluates the model on every (query, grid point) cell. Truths must be
/// nonempty and aligned with the model's query indices; absent or empty model
/// outputs score 0. A model failure is rethrown with the offending indices.
IoUMatrix build_iou_matrix(const SegmentationModel& model, std::span<const BinaryMask> truths);

/// Same, restricted to a subset of query indices (truths aligned with
/// `queries`). Used by the split-calibration variant.
IoUMatrix build_iou_matrix(const SegmentationModel& model, std::span<const std::size_t> queries,
                           std::span<const BinaryMask> truths);

/// Derives success sets at threshold tau (strict inequality).
SuccessSets success_sets(const IoUMatrix& matrix, double tau);

/// Checks whether any parameter subset can reach the coverage target.
/// Infeasibility is reported as data here, not thrown.
FeasibilityReport feasibility_check(const SuccessSets& ss, double alpha, std::size_t n);

} // namespace confseg
