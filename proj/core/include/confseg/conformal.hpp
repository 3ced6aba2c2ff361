#pragma once

#include "confseg/calibration.hpp"
#include "confseg/mask.hpp"
#include "confseg/set_cover.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace confseg {

class SegmentationModel;

struct ConformalConfig {
    double alpha = 0.2; // error rate
    double tau = 0.7;   // IoU target
    double eta = 0.9;   // duplicate-prediction IoU threshold

    void validate() const;
};

/// Output of set-cover calibration: the selected grid indices plus, once
/// re-calibration has run, the adjusted IoU threshold theta_tilde.
struct CalibratedSelector {
    std::vector<std::size_t> j_indices; // ascending grid indices
    std::optional<double> theta_tilde;
    ConformalConfig config;
    std::string grid_fingerprint;
    std::vector<std::vector<double>> grid_points; // values of the selected points
    std::vector<std::string> calibration_ids;     // for test/calibration overlap checks
};

struct MaskCandidate {
    BinaryMask mask;
    std::size_t source_index = 0; // grid index that produced the mask
};

/// Deduplicated prediction set. Survivors are not required to be pairwise
/// dissimilar; the guarantee is that every discarded mask had IoU above eta
/// with some survivor. `minimal` is false only when the input exceeded the
/// exhaustive-search guard and a greedy dominating heuristic was used.
struct PredictionSet {
    std::vector<BinaryMask> masks;
    std::vector<std::size_t> source_indices;
    bool minimal = true;

    std::size_t size() const { return masks.size(); }
    bool empty() const { return masks.empty(); }
};

/// Exhaustive duplicate removal above 12 masks falls back to a greedy
/// dominating heuristic.
inline constexpr std::size_t kUniqueExactLimit = 12;

/// Selects the smallest parameter subset whose success sets cover
/// ceil((1 - alpha) * n) calibration points (greedy cover plus exhaustive
/// refinement). Throws InfeasibleError with the standard remedy message when
/// no subset can reach the target.
CalibratedSelector calibrate(const SuccessSets& ss, const ConformalConfig& config,
                             const ParameterGrid& grid,
                             const RefineBudget& budget = RefineBudget{});

/// One model output per selected grid index, in index order; absent or empty
/// outputs stay nullopt. The model's grid must match the selector fingerprint.
std::vector<std::optional<BinaryMask>> predict_raw(const CalibratedSelector& sel,
                                                   const SegmentationModel& model,
                                                   std::size_t query);

/// Minimal dominating subset: the first subset, by increasing cardinality and
/// lexicographic position order, such that every excluded mask has IoU above
/// eta with some included mask. Zero-area candidates are dropped first.
PredictionSet unique(const std::vector<MaskCandidate>& candidates, double eta);

/// The q-th smallest value with q = max(1, floor(alpha * (n + 1))).
double empirical_quantile(std::span<const double> values, double alpha);

/// Re-runs the selector over its calibration data, deduplicates each
/// prediction set, records the best IoU per point (0 when the set empties),
/// and stores the alpha-quantile of those scores as theta_tilde.
CalibratedSelector recalibrate(const CalibratedSelector& sel, const SegmentationModel& model,
                               std::span<const BinaryMask> truths);

/// predict_raw followed by unique.
PredictionSet predict(const CalibratedSelector& sel, const SegmentationModel& model,
                      std::size_t query);

/// Best IoU between `truth` and any mask in the set; 0 for an empty set.
double best_iou(const PredictionSet& set, const BinaryMask& truth);

} // namespace confseg
