#pragma once

// Test-only reference implementations. Everything here recomputes results on
// dense pixel grids or by raw enumeration, independent of the RLE and bitmask
// code paths under test.

#include "confseg/calibration.hpp"
#include "confseg/mask.hpp"
#include "confseg/model.hpp"
#include "confseg/rng.hpp"
#include "confseg/set_cover.hpp"

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

namespace confseg::testing {

struct DenseMask {
    std::uint32_t w = 0;
    std::uint32_t h = 0;
    std::vector<std::uint8_t> bits;

    static DenseMask of(const BinaryMask& m) {
        return DenseMask{m.width(), m.height(), m.to_bits()};
    }
    BinaryMask to_mask() const { return BinaryMask::from_bits(w, h, bits); }
    std::uint8_t& at(std::uint32_t x, std::uint32_t y) { return bits[std::size_t{y} * w + x]; }
    std::uint8_t get(std::uint32_t x, std::uint32_t y) const {
        return bits[std::size_t{y} * w + x];
    }
};

inline double dense_iou(const DenseMask& a, const DenseMask& b) {
    std::uint64_t inter = 0;
    std::uint64_t uni = 0;
    for (std::size_t i = 0; i < a.bits.size(); ++i) {
        inter += a.bits[i] && b.bits[i] ? 1 : 0;
        uni += a.bits[i] || b.bits[i] ? 1 : 0;
    }
    return static_cast<double>(inter) / static_cast<double>(uni);
}

inline DenseMask dense_dilate(const DenseMask& m, std::uint32_t radius) {
    DenseMask out{m.w, m.h, std::vector<std::uint8_t>(m.bits.size(), 0)};
    const std::int64_t r = radius;
    for (std::int64_t y = 0; y < m.h; ++y) {
        for (std::int64_t x = 0; x < m.w; ++x) {
            bool hit = false;
            for (std::int64_t dy = -r; dy <= r && !hit; ++dy) {
                for (std::int64_t dx = -r; dx <= r && !hit; ++dx) {
                    const std::int64_t sx = x + dx;
                    const std::int64_t sy = y + dy;
                    if (sx >= 0 && sy >= 0 && sx < m.w && sy < m.h &&
                        m.get(static_cast<std::uint32_t>(sx), static_cast<std::uint32_t>(sy))) {
                        hit = true;
                    }
                }
            }
            out.at(static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y)) = hit ? 1 : 0;
        }
    }
    return out;
}

inline bool dense_contains(const DenseMask& outer, const DenseMask& inner) {
    for (std::size_t i = 0; i < outer.bits.size(); ++i) {
        if (inner.bits[i] && !outer.bits[i]) {
            return false;
        }
    }
    return true;
}

struct DenseSegScores {
    double over;
    double under;
};

inline DenseSegScores dense_seg_scores(const DenseMask& truth, const DenseMask& pred) {
    std::uint64_t inter = 0;
    std::uint64_t t_area = 0;
    std::uint64_t p_area = 0;
    for (std::size_t i = 0; i < truth.bits.size(); ++i) {
        t_area += truth.bits[i] ? 1 : 0;
        p_area += pred.bits[i] ? 1 : 0;
        inter += truth.bits[i] && pred.bits[i] ? 1 : 0;
    }
    return DenseSegScores{1.0 - static_cast<double>(inter) / static_cast<double>(t_area),
                          1.0 - static_cast<double>(inter) / static_cast<double>(p_area)};
}

/// Random mask mixing structure (a filled rectangle or disc) with salt-and-
/// pepper noise, so both long runs and single-pixel runs get exercised.
inline BinaryMask random_mask(Rng& rng, std::uint32_t w, std::uint32_t h,
                              bool allow_empty = false) {
    DenseMask d{w, h, std::vector<std::uint8_t>(std::size_t{w} * h, 0)};
    const int kind = static_cast<int>(rng.uniform_int(3));
    if (kind == 0 || kind == 2) {
        const std::uint32_t x1 = static_cast<std::uint32_t>(rng.uniform_int(w));
        const std::uint32_t y1 = static_cast<std::uint32_t>(rng.uniform_int(h));
        const std::uint32_t x2 = static_cast<std::uint32_t>(rng.uniform_int(w));
        const std::uint32_t y2 = static_cast<std::uint32_t>(rng.uniform_int(h));
        for (std::uint32_t y = std::min(y1, y2); y <= std::max(y1, y2); ++y) {
            for (std::uint32_t x = std::min(x1, x2); x <= std::max(x1, x2); ++x) {
                d.at(x, y) = 1;
            }
        }
    }
    if (kind == 1 || kind == 2) {
        const double density = rng.uniform(0.02, 0.4);
        for (auto& bit : d.bits) {
            if (rng.uniform() < density) {
                bit = 1;
            }
        }
    }
    BinaryMask m = d.to_mask();
    if (!allow_empty && m.is_empty()) {
        DenseMask one{w, h, std::vector<std::uint8_t>(std::size_t{w} * h, 0)};
        one.at(static_cast<std::uint32_t>(rng.uniform_int(w)),
               static_cast<std::uint32_t>(rng.uniform_int(h))) = 1;
        return one.to_mask();
    }
    return m;
}

/// Minimum dominating subset by direct enumeration: smallest subset (first in
/// cardinality-then-lexicographic order) such that every excluded mask has
/// IoU above eta with some included one. Independent of the bitmask search in
/// the library.
inline std::vector<std::size_t> brute_force_min_dominating(const std::vector<BinaryMask>& masks,
                                                           double eta) {
    const std::size_t m = masks.size();
    std::vector<std::size_t> best;
    for (std::size_t c = 1; c <= m; ++c) {
        std::vector<std::size_t> combo(c);
        for (std::size_t i = 0; i < c; ++i) {
            combo[i] = i;
        }
        for (;;) {
            bool valid = true;
            for (std::size_t i = 0; i < m && valid; ++i) {
                if (std::find(combo.begin(), combo.end(), i) != combo.end()) {
                    continue;
                }
                bool dominated = false;
                for (std::size_t p : combo) {
                    if (iou(masks[i], masks[p]) > eta) {
                        dominated = true;
                        break;
                    }
                }
                valid = dominated;
            }
            if (valid) {
                return combo;
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
    return best; // unreachable for nonempty input
}

/// q-th smallest by full sort, with q = max(1, floor(alpha * (n + 1))).
inline double sorted_quantile(std::vector<double> values, double alpha) {
    std::sort(values.begin(), values.end());
    const double raw = alpha * static_cast<double>(values.size() + 1);
    std::size_t q = static_cast<std::size_t>(raw);
    if (q < 1) {
        q = 1;
    }
    if (q > values.size()) {
        q = values.size();
    }
    return values[q - 1];
}

inline CoverInstance random_cover_instance(Rng& rng, std::size_t max_n, std::size_t max_k) {
    CoverInstance inst;
    inst.universe_size = 2 + rng.uniform_int(max_n - 1);
    const std::size_t k = 2 + rng.uniform_int(max_k - 1);
    const double density = rng.uniform(0.05, 0.5);
    inst.sets.reserve(k);
    Bitset all(inst.universe_size);
    for (std::size_t j = 0; j < k; ++j) {
        Bitset s(inst.universe_size);
        for (std::size_t i = 0; i < inst.universe_size; ++i) {
            if (rng.uniform() < density) {
                s.set(i);
            }
        }
        all |= s;
        inst.sets.push_back(std::move(s));
    }
    const std::size_t coverable = all.count();
    inst.target = coverable == 0 ? 0 : 1 + rng.uniform_int(coverable);
    return inst;
}

/// Model defined by an explicit lookup table; the workhorse for unit tests.
class TableModel : public SegmentationModel {
public:
    TableModel(std::vector<std::vector<std::optional<BinaryMask>>> table, ParameterGrid grid)
        : table_(std::move(table)), grid_(std::move(grid)) {}

    std::size_t query_count() const override { return table_.size(); }
    const ParameterGrid& grid() const override { return grid_; }
    std::optional<BinaryMask> predict(std::size_t query, std::size_t param) const override {
        return table_.at(query).at(param);
    }

private:
    std::vector<std::vector<std::optional<BinaryMask>>> table_;
    ParameterGrid grid_;
};

} // namespace confseg::testing
