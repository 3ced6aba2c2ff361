#pragma once

#include "confseg/calibration.hpp"
#include "confseg/conformal.hpp"
#include "confseg/mask.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace confseg {

class SegmentationModel;

/// Seeded split of n calibration indices into a ranking part of size n1 and a
/// risk-estimation part of size n2 = n - n1.
struct SplitPlan {
    std::size_t n1 = 0;
    std::size_t n2 = 0;
    std::vector<std::size_t> permutation; // part1 = first n1 entries

    std::span<const std::size_t> part1() const {
        return std::span<const std::size_t>(permutation.data(), n1);
    }
    std::span<const std::size_t> part2() const {
        return std::span<const std::size_t>(permutation.data() + n1, n2);
    }
};

/// Finite-sample selector: the full greedy ranking of grid indices, the risk
/// curve estimated on the second split, and the selected prefix length
/// lambda_hat (1-based; nullopt when no prefix meets the risk threshold).
struct CrcSelector {
    std::vector<std::size_t> ranked; // permutation of [k], highest priority first
    std::optional<std::size_t> lambda_hat;
    ConformalConfig config;
    std::vector<double> risk_curve; // r_hat(lambda) for lambda = 1..k
    std::string grid_fingerprint;
    std::vector<std::vector<double>> grid_points; // full grid, in grid order
    std::vector<std::string> calibration_ids;
};

SplitPlan split_calibration(std::size_t n, std::size_t n1, std::uint64_t seed);

/// Ranks all grid indices by greedy marginal coverage of the part-1 success
/// sets; ties and exhausted coverage fall back to ascending index order.
std::vector<std::size_t> greedy_rank(const SuccessSets& ss);

/// Order-preserving duplicate removal: a mask is kept iff it has IoU at most
/// eta with every previously kept mask. Returns the kept positions. Unlike
/// `unique`, the output on a prefix is always a subset of the output on any
/// extension, which makes the downstream loss monotone.
std::vector<std::size_t> unique_star(std::span<const BinaryMask> ordered, double eta);

/// r_hat(lambda) for lambda = 1..k: the fraction of part-2 points whose
/// deduplicated prefix predictions all have IoU at most tau with the truth.
std::vector<double> risk_curve(const SegmentationModel& model,
                               std::span<const std::size_t> part2_queries,
                               std::span<const BinaryMask> part2_truths,
                               const std::vector<std::size_t>& ranked, double tau, double eta);

/// Smallest 1-based lambda with r_hat(lambda) <= alpha - (1 - alpha) / n2,
/// or nullopt when no prefix qualifies.
std::optional<std::size_t> select_lambda(std::span<const double> risk, double alpha,
                                         std::size_t n2);

/// Full pipeline: split, rank on part 1, estimate risk on part 2, select
/// lambda_hat. Truths are aligned with the model's query indices.
CrcSelector calibrate_crc(const SegmentationModel& model, std::span<const BinaryMask> truths,
                          const ConformalConfig& config, std::size_t n1, std::uint64_t seed);

/// Predictions for the ranked prefix of length lambda_hat, deduplicated with
/// unique_star. Throws InfeasibleError when the selector is infeasible.
PredictionSet predict_crc(const CrcSelector& sel, const SegmentationModel& model,
                          std::size_t query);

/// As predict_crc but with an explicit prefix length (used by nesting tests).
PredictionSet predict_crc_prefix(const CrcSelector& sel, const SegmentationModel& model,
                                 std::size_t query, std::size_t lambda);

} // namespace confseg
