#include "confseg/conformal.hpp"

#include "confseg/errors.hpp"
#include "confseg/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace confseg {

namespace {

std::vector<MaskCandidate> drop_empty(const std::vector<MaskCandidate>& candidates) {
    std::vector<MaskCandidate> kept;
    kept.reserve(candidates.size());
    for (const MaskCandidate& c : candidates) {
        if (!c.mask.is_empty()) {
            kept.push_back(c);
        }
    }
    return kept;
}

PredictionSet pick(const std::vector<MaskCandidate>& candidates,
                   const std::vector<std::size_t>& positions, bool minimal) {
    PredictionSet out;
    out.minimal = minimal;
    out.masks.reserve(positions.size());
    out.source_indices.reserve(positions.size());
    for (std::size_t p : positions) {
        out.masks.push_back(candidates[p].mask);
        out.source_indices.push_back(candidates[p].source_index);
    }
    return out;
}

/// Greedy dominating-set heuristic for oversized inputs: repeatedly keep the
/// mask that dominates the most not-yet-dominated ones (ties by position).
std::vector<std::size_t> greedy_dominating(const std::vector<std::uint32_t>& dominates,
                                           std::size_t m) {
    const std::uint32_t full = m == 32 ? 0xffffffffu : ((std::uint32_t{1} << m) - 1);
    std::uint32_t dominated = 0;
    std::vector<std::size_t> picked;
    while (dominated != full) {
        std::size_t best = m;
        int best_gain = -1;
        for (std::size_t j = 0; j < m; ++j) {
            const int gain = std::popcount(dominates[j] & ~dominated);
            if (gain > best_gain) {
                best_gain = gain;
                best = j;
            }
        }
        picked.push_back(best);
        dominated |= dominates[best];
    }
    std::sort(picked.begin(), picked.end());
    return picked;
}

} // namespace

void ConformalConfig::validate() const {
    auto in_unit = [](double v) { return v > 0.0 && v < 1.0; };
    if (!in_unit(alpha) || !in_unit(tau) || !in_unit(eta)) {
        throw Error("ConformalConfig: alpha, tau, and eta must lie strictly in (0, 1)");
    }
}

CalibratedSelector calibrate(const SuccessSets& ss, const ConformalConfig& config,
                             const ParameterGrid& grid, const RefineBudget& budget) {
    config.validate();
    if (grid.size() != ss.sets.size()) {
        throw Error("calibrate: grid size does not match success sets");
    }

    CoverInstance inst;
    inst.universe_size = ss.n;
    inst.sets = ss.sets;
    inst.target = coverage_target(config.alpha, ss.n);

    CoverSolution solution;
    try {
        solution = refine_minimal_cover(inst, greedy_partial_cover(inst), budget);
    } catch (const InfeasibleError&) {
        const FeasibilityReport report = feasibility_check(ss, config.alpha, ss.n);
        throw InfeasibleError(
            "calibrate: only " + std::to_string(report.max_coverable) + " of " +
            std::to_string(report.required) +
            " required calibration points are coverable at tau=" + std::to_string(ss.tau) +
            "; increase the error rate alpha, lower the IoU target tau, or widen the "
            "parameter grid");
    }

    CalibratedSelector sel;
    sel.j_indices = solution.indices;
    sel.config = config;
    sel.grid_fingerprint = grid.fingerprint();
    sel.grid_points.reserve(solution.indices.size());
    for (std::size_t j : solution.indices) {
        sel.grid_points.push_back(grid.point(j));
    }
    return sel;
}

std::vector<std::optional<BinaryMask>> predict_raw(const CalibratedSelector& sel,
                                                   const SegmentationModel& model,
                                                   std::size_t query) {
    if (model.grid().fingerprint() != sel.grid_fingerprint) {
        throw Error("predict_raw: model grid does not match the selector's grid fingerprint");
    }
    std::vector<std::optional<BinaryMask>> out;
    out.reserve(sel.j_indices.size());
    for (std::size_t j : sel.j_indices) {
        std::optional<BinaryMask> pred = model.predict(query, j);
        if (pred.has_value() && pred->is_empty()) {
            pred.reset();
        }
        out.push_back(std::move(pred));
    }
    return out;
}

PredictionSet unique(const std::vector<MaskCandidate>& candidates, double eta) {
    const std::vector<MaskCandidate> cands = drop_empty(candidates);
    const std::size_t m = cands.size();
    if (m == 0) {
        return PredictionSet{};
    }
    if (m == 1) {
        return pick(cands, {0}, true);
    }

    // dominates[j] = positions whose mask has IoU above eta with mask j,
    // plus j itself (keeping a mask trivially settles it).
    std::vector<std::uint32_t> dominates(m, 0);
    for (std::size_t a = 0; a < m; ++a) {
        dominates[a] |= std::uint32_t{1} << a;
        for (std::size_t b = a + 1; b < m; ++b) {
            if (iou(cands[a].mask, cands[b].mask) > eta) {
                dominates[a] |= std::uint32_t{1} << b;
                dominates[b] |= std::uint32_t{1} << a;
            }
        }
    }

    if (m > kUniqueExactLimit) {
        return pick(cands, greedy_dominating(dominates, m), false);
    }

    const std::uint32_t full = (std::uint32_t{1} << m) - 1;
    for (std::size_t c = 1; c <= m; ++c) {
        std::vector<std::size_t> combo(c);
        std::iota(combo.begin(), combo.end(), std::size_t{0});
        for (;;) {
            std::uint32_t members = 0;
            for (std::size_t p : combo) {
                members |= std::uint32_t{1} << p;
            }
            bool ok = true;
            std::uint32_t rest = full & ~members;
            while (rest != 0) {
                const int i = std::countr_zero(rest);
                rest &= rest - 1;
                if ((dominates[static_cast<std::size_t>(i)] & members) == 0) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                return pick(cands, combo, true);
            }
            std::size_t pos = c;
            while (pos > 0 && combo[pos - 1] == m - c + pos - 1) {
                --pos;
            }
            if (pos == 0) {
                break;
            }
            ++combo[pos - 1];
            for (std::size_t i = pos; i < c; ++i) {
                combo[i] = combo[i - 1] + 1;
            }
        }
    }
    // The full set always dominates its (empty) complement.
    throw Error("unique: exhaustive search failed"); // unreachable
}

double empirical_quantile(std::span<const double> values, double alpha) {
    if (values.empty()) {
        throw Error("empirical_quantile: no values");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw Error("empirical_quantile: alpha must lie strictly in (0, 1)");
    }
    const std::size_t n = values.size();
    const double raw = alpha * static_cast<double>(n + 1);
    std::size_t q = static_cast<std::size_t>(std::floor(raw + 1e-9));
    q = std::clamp<std::size_t>(q, 1, n);
    std::vector<double> sorted(values.begin(), values.end());
    std::nth_element(sorted.begin(), sorted.begin() + (q - 1), sorted.end());
    return sorted[q - 1];
}

CalibratedSelector recalibrate(const CalibratedSelector& sel, const SegmentationModel& model,
                               std::span<const BinaryMask> truths) {
    if (sel.j_indices.empty()) {
        throw Error("recalibrate: selector has no grid indices");
    }
    if (truths.empty()) {
        throw Error("recalibrate: no calibration data");
    }
    std::vector<double> scores;
    scores.reserve(truths.size());
    for (std::size_t i = 0; i < truths.size(); ++i) {
        const auto raw = predict_raw(sel, model, i);
        std::vector<MaskCandidate> present;
        for (std::size_t p = 0; p < raw.size(); ++p) {
            if (raw[p].has_value()) {
                present.push_back(MaskCandidate{*raw[p], sel.j_indices[p]});
            }
        }
        const PredictionSet deduped = unique(present, sel.config.eta);
        scores.push_back(best_iou(deduped, truths[i]));
    }
    CalibratedSelector out = sel;
    out.theta_tilde = empirical_quantile(scores, sel.config.alpha);
    return out;
}

PredictionSet predict(const CalibratedSelector& sel, const SegmentationModel& model,
                      std::size_t query) {
    const auto raw = predict_raw(sel, model, query);
    std::vector<MaskCandidate> present;
    for (std::size_t p = 0; p < raw.size(); ++p) {
        if (raw[p].has_value()) {
            present.push_back(MaskCandidate{*raw[p], sel.j_indices[p]});
        }
    }
    return unique(present, sel.config.eta);
}

double best_iou(const PredictionSet& set, const BinaryMask& truth) {
    double best = 0.0;
    for (const BinaryMask& m : set.masks) {
        best = std::max(best, iou(truth, m));
    }
    return best;
}

} // namespace confseg
