#pragma once

#include <cstdint>
#include <vector>

namespace confseg {

/// One run of set pixels: `length` pixels starting at flat row-major offset
/// `start` (offset = y * width + x).
struct Run {
    std::uint32_t start = 0;
    std::uint32_t length = 0;

    bool operator==(const Run&) const = default;
};

/// Run-length-encoded binary image region.
///
/// The encoding is canonical: runs are sorted by start offset, non-overlapping
/// and maximal (adjacent flat offsets are merged, including across row
/// boundaries), and every run lies inside width*height. Two masks are equal as
/// pixel sets iff their fields compare equal. Instances are immutable after
/// construction and safe to share across threads.
class BinaryMask {
public:
    BinaryMask() = default;

    /// Validates the canonical-form invariants; throws Error on violation.
    BinaryMask(std::uint32_t width, std::uint32_t height, std::vector<Run> runs);

    /// Encodes a dense row-major bit grid (nonzero = set).
    static BinaryMask from_bits(std::uint32_t width, std::uint32_t height,
                                const std::vector<std::uint8_t>& bits);

    static BinaryMask empty(std::uint32_t width, std::uint32_t height) {
        return BinaryMask(width, height, {});
    }

    std::uint32_t width() const { return width_; }
    std::uint32_t height() const { return height_; }
    const std::vector<Run>& runs() const { return runs_; }

    std::uint64_t area() const { return area_; }
    bool is_empty() const { return runs_.empty(); }

    bool test(std::uint32_t x, std::uint32_t y) const;

    /// Decodes to a dense row-major bit grid of width*height bytes.
    std::vector<std::uint8_t> to_bits() const;

    bool operator==(const BinaryMask&) const = default;

private:
    std::uint32_t width_ = 0;
    std::uint32_t height_ = 0;
    std::uint64_t area_ = 0;
    std::vector<Run> runs_;
};

/// Over- and under-segmentation scores of a prediction against a truth mask.
/// Both lie in [0, 1]; (0, 0) iff the masks are equal.
struct SegScores {
    double over = 0.0;
    double under = 0.0;
};

/// Intersection-over-union of two masks of equal dimensions.
/// Exactly one empty operand yields 0; both empty is a domain error.
double iou(const BinaryMask& a, const BinaryMask& b);

/// Number of pixels in the intersection.
std::uint64_t intersection_area(const BinaryMask& a, const BinaryMask& b);

/// Morphological dilation by a square (Chebyshev) structuring element of
/// half-width `radius`, clipped to the image bounds. dilate(m, 0) == m and the
/// result always contains m.
BinaryMask dilate(const BinaryMask& m, std::uint32_t radius);

/// True iff every pixel of `inner` is set in `outer`.
bool contains(const BinaryMask& outer, const BinaryMask& inner);

/// over = 1 - |truth ∩ pred| / |truth|, under = 1 - |truth ∩ pred| / |pred|.
/// Both masks must be nonempty and share dimensions.
SegScores seg_scores(const BinaryMask& truth, const BinaryMask& pred);

} // namespace confseg
