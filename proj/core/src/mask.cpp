#include "confseg/mask.hpp"

#include "confseg/errors.hpp"

#include <algorithm>
#include <string>
#include <utility>

namespace confseg {

namespace {

void require_same_dims(const BinaryMask& a, const BinaryMask& b, const char* op) {
    if (a.width() != b.width() || a.height() != b.height()) {
        throw DimensionMismatch(std::string(op) + ": masks are " +
                                std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                                " vs " + std::to_string(b.width()) + "x" +
                                std::to_string(b.height()));
    }
}

} // namespace

BinaryMask::BinaryMask(std::uint32_t width, std::uint32_t height, std::vector<Run> runs)
    : width_(width), height_(height), runs_(std::move(runs)) {
    const std::uint64_t total = std::uint64_t{width_} * height_;
    std::uint64_t prev_end = 0;
    bool first = true;
    for (const Run& r : runs_) {
        if (r.length == 0) {
            throw Error("BinaryMask: zero-length run");
        }
        const std::uint64_t end = std::uint64_t{r.start} + r.length;
        if (end > total) {
            throw Error("BinaryMask: run [" + std::to_string(r.start) + ", " +
                        std::to_string(end) + ") exceeds " + std::to_string(total) + " pixels");
        }
        if (!first && r.start <= prev_end) {
            // <= also rejects adjacent runs, which must be merged (maximality).
            throw Error("BinaryMask: runs not sorted, overlapping, or not maximal at offset " +
                        std::to_string(r.start));
        }
        prev_end = end;
        first = false;
        area_ += r.length;
    }
}

BinaryMask BinaryMask::from_bits(std::uint32_t width, std::uint32_t height,
                                 const std::vector<std::uint8_t>& bits) {
    const std::uint64_t total = std::uint64_t{width} * height;
    if (bits.size() != total) {
        throw Error("from_bits: grid has " + std::to_string(bits.size()) + " entries, expected " +
                    std::to_string(total));
    }
    std::vector<Run> runs;
    std::uint64_t i = 0;
    while (i < total) {
        if (!bits[i]) {
            ++i;
            continue;
        }
        const std::uint64_t start = i;
        while (i < total && bits[i]) {
            ++i;
        }
        runs.push_back(Run{static_cast<std::uint32_t>(start),
                           static_cast<std::uint32_t>(i - start)});
    }
    return BinaryMask(width, height, std::move(runs));
}

bool BinaryMask::test(std::uint32_t x, std::uint32_t y) const {
    const std::uint64_t offset = std::uint64_t{y} * width_ + x;
    auto it = std::upper_bound(runs_.begin(), runs_.end(), offset,
                               [](std::uint64_t off, const Run& r) { return off < r.start; });
    if (it == runs_.begin()) {
        return false;
    }
    --it;
    return offset < std::uint64_t{it->start} + it->length;
}

std::vector<std::uint8_t> BinaryMask::to_bits() const {
    std::vector<std::uint8_t> bits(std::uint64_t{width_} * height_, 0);
    for (const Run& r : runs_) {
        std::fill(bits.begin() + r.start, bits.begin() + r.start + r.length, std::uint8_t{1});
    }
    return bits;
}

std::uint64_t intersection_area(const BinaryMask& a, const BinaryMask& b) {
    require_same_dims(a, b, "intersection_area");
    std::uint64_t inter = 0;
    std::size_t ia = 0;
    std::size_t ib = 0;
    const auto& ra = a.runs();
    const auto& rb = b.runs();
    while (ia < ra.size() && ib < rb.size()) {
        const std::uint64_t a_start = ra[ia].start;
        const std::uint64_t a_end = a_start + ra[ia].length;
        const std::uint64_t b_start = rb[ib].start;
        const std::uint64_t b_end = b_start + rb[ib].length;
        const std::uint64_t lo = std::max(a_start, b_start);
        const std::uint64_t hi = std::min(a_end, b_end);
        if (lo < hi) {
            inter += hi - lo;
        }
        if (a_end < b_end) {
            ++ia;
        } else {
            ++ib;
        }
    }
    return inter;
}

double iou(const BinaryMask& a, const BinaryMask& b) {
    require_same_dims(a, b, "iou");
    if (a.is_empty() && b.is_empty()) {
        throw Error("iou: undefined for two empty masks");
    }
    const std::uint64_t inter = intersection_area(a, b);
    const std::uint64_t uni = a.area() + b.area() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

BinaryMask dilate(const BinaryMask& m, std::uint32_t radius) {
    if (radius == 0 || m.is_empty()) {
        return m;
    }
    const std::uint32_t w = m.width();
    const std::uint32_t h = m.height();

    // Split flat runs into per-row spans, expand each span into the rows it
    // reaches, then merge per row and re-encode.
    std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> rows(h);
    for (const Run& r : m.runs()) {
        std::uint64_t start = r.start;
        std::uint64_t remaining = r.length;
        while (remaining > 0) {
            const std::uint32_t y = static_cast<std::uint32_t>(start / w);
            const std::uint32_t x = static_cast<std::uint32_t>(start % w);
            const std::uint64_t span_len = std::min<std::uint64_t>(remaining, w - x);
            const std::uint32_t x1 = x > radius ? x - radius : 0;
            const std::uint32_t x2 =
                std::min<std::uint64_t>(std::uint64_t{x} + span_len - 1 + radius, w - 1);
            const std::uint32_t y_lo = y > radius ? y - radius : 0;
            const std::uint32_t y_hi = std::min<std::uint64_t>(std::uint64_t{y} + radius, h - 1);
            for (std::uint32_t yy = y_lo; yy <= y_hi; ++yy) {
                rows[yy].emplace_back(x1, x2);
            }
            start += span_len;
            remaining -= span_len;
        }
    }

    std::vector<Run> out;
    std::uint64_t open_start = 0;
    std::uint64_t open_end = 0; // exclusive; open_end == 0 means no open run
    bool has_open = false;
    for (std::uint32_t y = 0; y < h; ++y) {
        auto& spans = rows[y];
        std::sort(spans.begin(), spans.end());
        std::size_t i = 0;
        while (i < spans.size()) {
            std::uint32_t x1 = spans[i].first;
            std::uint32_t x2 = spans[i].second;
            ++i;
            while (i < spans.size() && spans[i].first <= x2 + 1) {
                x2 = std::max(x2, spans[i].second);
                ++i;
            }
            const std::uint64_t flat_start = std::uint64_t{y} * w + x1;
            const std::uint64_t flat_end = std::uint64_t{y} * w + x2 + 1;
            if (has_open && flat_start <= open_end) {
                open_end = std::max(open_end, flat_end);
            } else {
                if (has_open) {
                    out.push_back(Run{static_cast<std::uint32_t>(open_start),
                                      static_cast<std::uint32_t>(open_end - open_start)});
                }
                open_start = flat_start;
                open_end = flat_end;
                has_open = true;
            }
        }
    }
    if (has_open) {
        out.push_back(Run{static_cast<std::uint32_t>(open_start),
                          static_cast<std::uint32_t>(open_end - open_start)});
    }
    return BinaryMask(w, h, std::move(out));
}

bool contains(const BinaryMask& outer, const BinaryMask& inner) {
    require_same_dims(outer, inner, "contains");
    // Outer runs are maximal, so every inner run must sit inside one of them.
    const auto& ro = outer.runs();
    std::size_t io = 0;
    for (const Run& r : inner.runs()) {
        const std::uint64_t start = r.start;
        const std::uint64_t end = start + r.length;
        while (io < ro.size() && std::uint64_t{ro[io].start} + ro[io].length < end) {
            ++io;
        }
        if (io == ro.size() || ro[io].start > start) {
            return false;
        }
    }
    return true;
}

SegScores seg_scores(const BinaryMask& truth, const BinaryMask& pred) {
    require_same_dims(truth, pred, "seg_scores");
    if (truth.is_empty()) {
        throw Error("seg_scores: empty truth mask");
    }
    if (pred.is_empty()) {
        throw Error("seg_scores: empty prediction mask");
    }
    const double inter = static_cast<double>(intersection_area(truth, pred));
    return SegScores{1.0 - inter / static_cast<double>(truth.area()),
                     1.0 - inter / static_cast<double>(pred.area())};
}

} // namespace confseg
