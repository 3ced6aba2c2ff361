#include "confseg/calibration.hpp"

#include "confseg/errors.hpp"
#include "confseg/model.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace confseg {

ParameterGrid::ParameterGrid(std::vector<std::vector<double>> points)
    : points_(std::move(points)) {
    if (points_.empty()) {
        throw Error("ParameterGrid: empty grid");
    }
    for (std::size_t a = 0; a < points_.size(); ++a) {
        if (points_[a].empty()) {
            throw Error("ParameterGrid: point " + std::to_string(a) + " has no coordinates");
        }
        for (std::size_t b = a + 1; b < points_.size(); ++b) {
            if (points_[a] == points_[b]) {
                throw Error("ParameterGrid: duplicate points at " + std::to_string(a) + " and " +
                            std::to_string(b));
            }
        }
    }
}

ParameterGrid ParameterGrid::linear(double lo, double hi, std::size_t count) {
    std::vector<std::vector<double>> pts;
    pts.reserve(count);
    if (count == 1) {
        pts.push_back({lo});
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            pts.push_back({lo + (hi - lo) * static_cast<double>(i) /
                                    static_cast<double>(count - 1)});
        }
    }
    return ParameterGrid(std::move(pts));
}

std::string ParameterGrid::fingerprint() const {
    // FNV-1a over the point structure and raw double bits.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint64_t v) {
        for (int byte = 0; byte < 8; ++byte) {
            h ^= (v >> (8 * byte)) & 0xff;
            h *= 0x100000001b3ULL;
        }
    };
    mix(points_.size());
    for (const auto& p : points_) {
        mix(p.size());
        for (double c : p) {
            std::uint64_t bits;
            std::memcpy(&bits, &c, sizeof(bits));
            mix(bits);
        }
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

std::size_t coverage_target(double alpha, std::size_t n) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw Error("coverage_target: alpha must lie strictly in (0, 1)");
    }
    const double raw = (1.0 - alpha) * static_cast<double>(n);
    return static_cast<std::size_t>(std::ceil(raw - 1e-9));
}

IoUMatrix build_iou_matrix(const SegmentationModel& model, std::span<const BinaryMask> truths) {
    std::vector<std::size_t> all(truths.size());
    for (std::size_t i = 0; i < all.size(); ++i) {
        all[i] = i;
    }
    return build_iou_matrix(model, all, truths);
}

IoUMatrix build_iou_matrix(const SegmentationModel& model, std::span<const std::size_t> queries,
                           std::span<const BinaryMask> truths) {
    if (queries.empty()) {
        throw Error("build_iou_matrix: no calibration data");
    }
    if (queries.size() != truths.size()) {
        throw Error("build_iou_matrix: queries and truths differ in length");
    }
    const std::size_t n = queries.size();
    const std::size_t k = model.grid().size();
    IoUMatrix m;
    m.n = n;
    m.k = k;
    m.scores.assign(n * k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (truths[i].is_empty()) {
            throw Error("build_iou_matrix: empty truth mask at calibration index " +
                        std::to_string(i));
        }
        for (std::size_t j = 0; j < k; ++j) {
            std::optional<BinaryMask> pred;
            try {
                pred = model.predict(queries[i], j);
            } catch (const std::exception& e) {
                throw Error("build_iou_matrix: model failed at calibration index " +
                            std::to_string(i) + ", grid index " + std::to_string(j) + ": " +
                            e.what());
            }
            if (pred.has_value() && !pred->is_empty()) {
                m.scores[i * k + j] = iou(truths[i], *pred);
            }
        }
    }
    return m;
}

SuccessSets success_sets(const IoUMatrix& matrix, double tau) {
    if (!(tau > 0.0 && tau < 1.0)) {
        throw Error("success_sets: tau must lie strictly in (0, 1)");
    }
    SuccessSets ss;
    ss.tau = tau;
    ss.n = matrix.n;
    ss.sets.assign(matrix.k, Bitset(matrix.n));
    for (std::size_t i = 0; i < matrix.n; ++i) {
        for (std::size_t j = 0; j < matrix.k; ++j) {
            if (matrix.at(i, j) > tau) {
                ss.sets[j].set(i);
            }
        }
    }
    return ss;
}

FeasibilityReport feasibility_check(const SuccessSets& ss, double alpha, std::size_t n) {
    FeasibilityReport report;
    report.alpha = alpha;
    report.tau = ss.tau;
    report.required = coverage_target(alpha, n);

    Bitset everything(n);
    std::size_t best_single = 0;
    for (const Bitset& s : ss.sets) {
        everything |= s;
        best_single = std::max(best_single, s.count());
    }
    report.max_coverable = everything.count();
    report.feasible = report.max_coverable >= report.required;
    report.best_single_coverage =
        n == 0 ? 0.0 : static_cast<double>(best_single) / static_cast<double>(n);
    return report;
}

} // namespace confseg
