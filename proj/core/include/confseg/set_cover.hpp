#pragma once

#include "confseg/bitset.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace confseg {

/// Partial set cover instance: choose the fewest sets whose union covers at
/// least `target` of the `universe_size` elements.
struct CoverInstance {
    std::size_t universe_size = 0;
    std::vector<Bitset> sets;
    std::size_t target = 0;
};

struct CoverSolution {
    std::vector<std::size_t> indices; // ascending
    std::size_t covered = 0;          // |union of the selected sets|
    bool minimal_certified = false;   // size proven minimal by exhaustive search
};

/// Caps for the exhaustive refinement step. Subset enumeration is skipped
/// entirely when the greedy solution is larger than `max_greedy_size`, and
/// abandoned mid-way once `max_subsets` combinations have been inspected.
struct RefineBudget {
    std::size_t max_greedy_size = 8;
    std::uint64_t max_subsets = 50'000'000;

    static RefineBudget unlimited() {
        return RefineBudget{static_cast<std::size_t>(-1), UINT64_MAX};
    }
};

/// Greedy approximation: repeatedly takes the set covering the most uncovered
/// elements, ties broken by lowest set index, until the target is reached.
/// Throws InfeasibleError when even the union of all sets falls short.
CoverSolution greedy_partial_cover(const CoverInstance& inst);

/// Exhaustive refinement of a greedy cover. Enumerates subsets by increasing
/// cardinality, subsets of equal cardinality in lexicographic order of their
/// sorted index tuples, and returns the first cover found. When no strictly
/// smaller cover exists the greedy size is proven minimal and the result is
/// canonicalized to the first-in-order cover of that size, so an unbudgeted
/// refinement agrees with brute_force_min_cover index-for-index. On budget
/// exhaustion the greedy solution is returned unchanged.
CoverSolution refine_minimal_cover(const CoverInstance& inst, const CoverSolution& greedy,
                                   const RefineBudget& budget = RefineBudget{});

/// Exhaustive minimum-cardinality cover with the same subset ordering.
/// Test oracle scale only: requires at most 20 sets.
CoverSolution brute_force_min_cover(const CoverInstance& inst);

} // namespace confseg
