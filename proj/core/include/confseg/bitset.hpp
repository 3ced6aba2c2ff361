#pragma once

#include <bit>
#include <cstdint>
#include <cstddef>
#include <vector>

namespace confseg {

/// Fixed-size bit set over a universe [0, n). Used for calibration success
/// sets and the set-cover engine, where union/popcount throughput matters.
class Bitset {
public:
    Bitset() = default;

    explicit Bitset(std::size_t n_bits)
        : n_bits_(n_bits), words_((n_bits + 63) / 64, 0) {}

    std::size_t size() const { return n_bits_; }

    void set(std::size_t i) { words_[i >> 6] |= std::uint64_t{1} << (i & 63); }

    bool test(std::size_t i) const {
        return (words_[i >> 6] >> (i & 63)) & 1;
    }

    std::size_t count() const {
        std::size_t total = 0;
        for (std::uint64_t w : words_) {
            total += static_cast<std::size_t>(std::popcount(w));
        }
        return total;
    }

    /// |this \ other| -- the marginal gain of this set over `other`.
    std::size_t count_and_not(const Bitset& other) const {
        std::size_t total = 0;
        for (std::size_t w = 0; w < words_.size(); ++w) {
            total += static_cast<std::size_t>(std::popcount(words_[w] & ~other.words_[w]));
        }
        return total;
    }

    Bitset& operator|=(const Bitset& other) {
        for (std::size_t w = 0; w < words_.size(); ++w) {
            words_[w] |= other.words_[w];
        }
        return *this;
    }

    friend Bitset operator|(Bitset lhs, const Bitset& rhs) {
        lhs |= rhs;
        return lhs;
    }

    bool operator==(const Bitset&) const = default;

    std::vector<std::size_t> to_indices() const {
        std::vector<std::size_t> out;
        out.reserve(count());
        for (std::size_t i = 0; i < n_bits_; ++i) {
            if (test(i)) {
                out.push_back(i);
            }
        }
        return out;
    }

private:
    std::size_t n_bits_ = 0;
    std::vector<std::uint64_t> words_;
};

} // namespace confseg
