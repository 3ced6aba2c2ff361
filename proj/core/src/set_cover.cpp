#include "confseg/set_cover.hpp"

#include "confseg/errors.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace confseg {

namespace {

void validate(const CoverInstance& inst) {
    if (inst.target > inst.universe_size) {
        throw Error("set cover: target exceeds universe size");
    }
    for (const Bitset& s : inst.sets) {
        if (s.size() != inst.universe_size) {
            throw Error("set cover: set width does not match universe size");
        }
    }
}

std::size_t union_count(const CoverInstance& inst, const std::vector<std::size_t>& indices) {
    Bitset acc(inst.universe_size);
    for (std::size_t j : indices) {
        acc |= inst.sets[j];
    }
    return acc.count();
}

void require_feasible(const CoverInstance& inst) {
    Bitset all(inst.universe_size);
    for (const Bitset& s : inst.sets) {
        all |= s;
    }
    if (all.count() < inst.target) {
        throw InfeasibleError("set cover: only " + std::to_string(all.count()) + " of " +
                              std::to_string(inst.target) + " required elements are coverable");
    }
}

enum class ScanOutcome { kFound, kNone, kBudgetExhausted };

/// Scans all index combinations of size `c` in lexicographic order and stops
/// at the first whose union reaches the target. Prefix unions are kept so
/// advancing the last position costs a single OR.
ScanOutcome first_cover_of_size(const CoverInstance& inst, std::size_t c,
                                std::uint64_t& budget_left, std::vector<std::size_t>& out) {
    const std::size_t k = inst.sets.size();
    if (c == 0) {
        if (budget_left == 0) {
            return ScanOutcome::kBudgetExhausted;
        }
        --budget_left;
        if (inst.target == 0) {
            out.clear();
            return ScanOutcome::kFound;
        }
        return ScanOutcome::kNone;
    }
    if (c > k) {
        return ScanOutcome::kNone;
    }

    std::vector<std::size_t> combo(c);
    std::iota(combo.begin(), combo.end(), std::size_t{0});
    std::vector<Bitset> prefix(c + 1, Bitset(inst.universe_size));
    auto recompute_from = [&](std::size_t pos) {
        for (std::size_t i = pos; i < c; ++i) {
            prefix[i + 1] = prefix[i] | inst.sets[combo[i]];
        }
    };
    recompute_from(0);

    for (;;) {
        if (budget_left == 0) {
            return ScanOutcome::kBudgetExhausted;
        }
        --budget_left;
        if (prefix[c].count() >= inst.target) {
            out = combo;
            return ScanOutcome::kFound;
        }
        // Advance to the next combination: bump the rightmost position that
        // still has headroom, reset the tail.
        std::size_t pos = c;
        while (pos > 0 && combo[pos - 1] == k - c + pos - 1) {
            --pos;
        }
        if (pos == 0) {
            return ScanOutcome::kNone;
        }
        ++combo[pos - 1];
        for (std::size_t i = pos; i < c; ++i) {
            combo[i] = combo[i - 1] + 1;
        }
        recompute_from(pos - 1);
    }
}

} // namespace

CoverSolution greedy_partial_cover(const CoverInstance& inst) {
    validate(inst);
    require_feasible(inst);

    const std::size_t k = inst.sets.size();
    Bitset covered(inst.universe_size);
    std::vector<char> used(k, 0);
    std::vector<std::size_t> picked;
    std::size_t covered_count = 0;

    while (covered_count < inst.target) {
        std::size_t best = k;
        std::size_t best_gain = 0;
        for (std::size_t j = 0; j < k; ++j) {
            if (used[j]) {
                continue;
            }
            const std::size_t gain = inst.sets[j].count_and_not(covered);
            if (gain > best_gain) {
                best_gain = gain;
                best = j;
            }
        }
        if (best == k) {
            // Unreachable after require_feasible; kept as a hard stop.
            throw InfeasibleError("set cover: no remaining set makes progress");
        }
        used[best] = 1;
        picked.push_back(best);
        covered |= inst.sets[best];
        covered_count = covered.count();
    }

    std::sort(picked.begin(), picked.end());
    return CoverSolution{std::move(picked), covered_count, false};
}

CoverSolution refine_minimal_cover(const CoverInstance& inst, const CoverSolution& greedy,
                                   const RefineBudget& budget) {
    validate(inst);
    if (union_count(inst, greedy.indices) < inst.target) {
        throw Error("refine_minimal_cover: input is not a valid cover");
    }
    const std::size_t g = greedy.indices.size();
    if (g == 0) {
        return CoverSolution{{}, greedy.covered, true};
    }
    if (g > budget.max_greedy_size) {
        return greedy;
    }

    std::uint64_t budget_left = budget.max_subsets;
    std::vector<std::size_t> found;
    for (std::size_t c = 1; c < g; ++c) {
        switch (first_cover_of_size(inst, c, budget_left, found)) {
        case ScanOutcome::kFound:
            return CoverSolution{found, union_count(inst, found), true};
        case ScanOutcome::kBudgetExhausted:
            return greedy;
        case ScanOutcome::kNone:
            break;
        }
    }
    // No smaller cover exists, so |greedy| is the true minimum. Canonicalize
    // to the first-in-order cover of that cardinality; the scan always finds
    // one because the greedy cover itself qualifies.
    switch (first_cover_of_size(inst, g, budget_left, found)) {
    case ScanOutcome::kFound:
        return CoverSolution{found, union_count(inst, found), true};
    default:
        return CoverSolution{greedy.indices, greedy.covered, true};
    }
}

CoverSolution brute_force_min_cover(const CoverInstance& inst) {
    validate(inst);
    if (inst.sets.size() > 20) {
        throw Error("brute_force_min_cover: instance has " + std::to_string(inst.sets.size()) +
                    " sets, oracle guard allows at most 20");
    }
    require_feasible(inst);

    std::uint64_t budget_left = UINT64_MAX;
    std::vector<std::size_t> found;
    for (std::size_t c = 0; c <= inst.sets.size(); ++c) {
        if (first_cover_of_size(inst, c, budget_left, found) == ScanOutcome::kFound) {
            return CoverSolution{found, union_count(inst, found), true};
        }
    }
    throw InfeasibleError("brute_force_min_cover: no cover found"); // unreachable
}

} // namespace confseg
