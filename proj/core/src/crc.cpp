#include "confseg/crc.hpp"

#include "confseg/errors.hpp"
#include "confseg/model.hpp"
#include "confseg/rng.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace confseg {

SplitPlan split_calibration(std::size_t n, std::size_t n1, std::uint64_t seed) {
    if (n1 < 1 || n1 >= n) {
        throw Error("split_calibration: need 1 <= n1 < n");
    }
    SplitPlan plan;
    plan.n1 = n1;
    plan.n2 = n - n1;
    plan.permutation.resize(n);
    std::iota(plan.permutation.begin(), plan.permutation.end(), std::size_t{0});
    Rng rng(seed);
    // Fisher-Yates with the library RNG so the split is seed-reproducible.
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.uniform_int(i));
        std::swap(plan.permutation[i - 1], plan.permutation[j]);
    }
    return plan;
}

std::vector<std::size_t> greedy_rank(const SuccessSets& ss) {
    const std::size_t k = ss.sets.size();
    if (k == 0) {
        throw Error("greedy_rank: no grid points");
    }
    Bitset covered(ss.n);
    std::vector<char> placed(k, 0);
    std::vector<std::size_t> ranked;
    ranked.reserve(k);
    for (std::size_t step = 0; step < k; ++step) {
        std::size_t best = k;
        std::size_t best_gain = 0;
        bool have_best = false;
        for (std::size_t j = 0; j < k; ++j) {
            if (placed[j]) {
                continue;
            }
            const std::size_t gain = ss.sets[j].count_and_not(covered);
            if (!have_best || gain > best_gain) {
                have_best = true;
                best_gain = gain;
                best = j;
            }
        }
        placed[best] = 1;
        ranked.push_back(best);
        covered |= ss.sets[best];
    }
    return ranked;
}

std::vector<std::size_t> unique_star(std::span<const BinaryMask> ordered, double eta) {
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        if (ordered[i].is_empty()) {
            continue;
        }
        bool duplicate = false;
        for (std::size_t p : kept) {
            if (iou(ordered[p], ordered[i]) > eta) {
                duplicate = true;
                break;
            }
        }
        if (!duplicate) {
            kept.push_back(i);
        }
    }
    return kept;
}

std::vector<double> risk_curve(const SegmentationModel& model,
                               std::span<const std::size_t> part2_queries,
                               std::span<const BinaryMask> part2_truths,
                               const std::vector<std::size_t>& ranked, double tau, double eta) {
    if (part2_queries.empty()) {
        throw Error("risk_curve: empty risk-estimation split");
    }
    if (part2_queries.size() != part2_truths.size()) {
        throw Error("risk_curve: queries and truths differ in length");
    }
    const std::size_t k = ranked.size();
    const std::size_t n2 = part2_queries.size();
    std::vector<std::size_t> losses(k, 0);

    // Extending the prefix one rank at a time reproduces the full dedup scan
    // at every lambda because unique_star keeps prefixes nested.
    for (std::size_t i = 0; i < n2; ++i) {
        std::vector<BinaryMask> kept;
        double best = 0.0;
        for (std::size_t lambda = 1; lambda <= k; ++lambda) {
            std::optional<BinaryMask> pred = model.predict(part2_queries[i], ranked[lambda - 1]);
            if (pred.has_value() && !pred->is_empty()) {
                bool duplicate = false;
                for (const BinaryMask& kmask : kept) {
                    if (iou(kmask, *pred) > eta) {
                        duplicate = true;
                        break;
                    }
                }
                if (!duplicate) {
                    best = std::max(best, iou(part2_truths[i], *pred));
                    kept.push_back(std::move(*pred));
                }
            }
            if (best <= tau) {
                ++losses[lambda - 1];
            }
        }
    }

    std::vector<double> risk(k);
    for (std::size_t lambda = 0; lambda < k; ++lambda) {
        risk[lambda] = static_cast<double>(losses[lambda]) / static_cast<double>(n2);
    }
    return risk;
}

std::optional<std::size_t> select_lambda(std::span<const double> risk, double alpha,
                                         std::size_t n2) {
    if (n2 == 0) {
        throw Error("select_lambda: n2 must be positive");
    }
    const double threshold = alpha - (1.0 - alpha) / static_cast<double>(n2);
    for (std::size_t lambda = 1; lambda <= risk.size(); ++lambda) {
        if (risk[lambda - 1] <= threshold) {
            return lambda;
        }
    }
    return std::nullopt;
}

CrcSelector calibrate_crc(const SegmentationModel& model, std::span<const BinaryMask> truths,
                          const ConformalConfig& config, std::size_t n1, std::uint64_t seed) {
    config.validate();
    if (truths.size() != model.query_count()) {
        throw Error("calibrate_crc: truths must align with the model's queries");
    }
    const SplitPlan plan = split_calibration(truths.size(), n1, seed);

    std::vector<BinaryMask> part1_truths;
    part1_truths.reserve(plan.n1);
    for (std::size_t q : plan.part1()) {
        part1_truths.push_back(truths[q]);
    }
    const IoUMatrix matrix = build_iou_matrix(model, plan.part1(), part1_truths);
    const SuccessSets ss = success_sets(matrix, config.tau);

    CrcSelector sel;
    sel.ranked = greedy_rank(ss);
    sel.config = config;
    sel.grid_fingerprint = model.grid().fingerprint();
    sel.grid_points = model.grid().points();

    std::vector<BinaryMask> part2_truths;
    part2_truths.reserve(plan.n2);
    for (std::size_t q : plan.part2()) {
        part2_truths.push_back(truths[q]);
    }
    sel.risk_curve =
        risk_curve(model, plan.part2(), part2_truths, sel.ranked, config.tau, config.eta);
    sel.lambda_hat = select_lambda(sel.risk_curve, config.alpha, plan.n2);
    return sel;
}

PredictionSet predict_crc_prefix(const CrcSelector& sel, const SegmentationModel& model,
                                 std::size_t query, std::size_t lambda) {
    if (model.grid().fingerprint() != sel.grid_fingerprint) {
        throw Error("predict_crc: model grid does not match the selector's grid fingerprint");
    }
    if (lambda == 0 || lambda > sel.ranked.size()) {
        throw Error("predict_crc: prefix length out of range");
    }
    std::vector<BinaryMask> ordered;
    std::vector<std::size_t> sources;
    ordered.reserve(lambda);
    for (std::size_t r = 0; r < lambda; ++r) {
        const std::size_t j = sel.ranked[r];
        std::optional<BinaryMask> pred = model.predict(query, j);
        if (pred.has_value() && !pred->is_empty()) {
            ordered.push_back(std::move(*pred));
            sources.push_back(j);
        }
    }
    const std::vector<std::size_t> kept = unique_star(ordered, sel.config.eta);
    PredictionSet out;
    out.minimal = true;
    for (std::size_t p : kept) {
        out.masks.push_back(ordered[p]);
        out.source_indices.push_back(sources[p]);
    }
    return out;
}

PredictionSet predict_crc(const CrcSelector& sel, const SegmentationModel& model,
                          std::size_t query) {
    if (!sel.lambda_hat.has_value()) {
        throw InfeasibleError(
            "predict_crc: no ranked prefix met the risk threshold during calibration; "
            "increase the error rate alpha, lower the IoU target tau, or widen the grid");
    }
    return predict_crc_prefix(sel, model, query, *sel.lambda_hat);
}

} // namespace confseg
