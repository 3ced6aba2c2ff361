#include "confseg/baselines.hpp"

#include "confseg/conformal.hpp"
#include "confseg/errors.hpp"
#include "confseg/model.hpp"

#include <string>

namespace confseg {

SingleParamBaseline best_single_parameter(const SuccessSets& ss) {
    if (ss.sets.empty()) {
        throw Error("best_single_parameter: no grid points");
    }
    std::size_t best = 0;
    std::size_t best_count = ss.sets[0].count();
    for (std::size_t j = 1; j < ss.sets.size(); ++j) {
        const std::size_t c = ss.sets[j].count();
        if (c > best_count) {
            best_count = c;
            best = j;
        }
    }
    SingleParamBaseline out;
    out.best_index = best;
    out.calib_coverage =
        ss.n == 0 ? 0.0 : static_cast<double>(best_count) / static_cast<double>(ss.n);
    return out;
}

std::vector<std::uint32_t> dilation_minima(const SegmentationModel& model,
                                           std::size_t base_index,
                                           std::span<const BinaryMask> truths,
                                           std::uint32_t d_max) {
    std::vector<std::uint32_t> minima;
    minima.reserve(truths.size());
    const std::uint32_t censored = d_max + 1;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        const std::optional<BinaryMask> pred = model.predict(i, base_index);
        if (!pred.has_value() || pred->is_empty()) {
            minima.push_back(censored);
            continue;
        }
        if (!contains(dilate(*pred, d_max), truths[i])) {
            minima.push_back(censored);
            continue;
        }
        // Containment is monotone in the margin, so binary-search the
        // smallest D that contains the truth.
        std::uint32_t lo = 0;
        std::uint32_t hi = d_max;
        while (lo < hi) {
            const std::uint32_t mid = lo + (hi - lo) / 2;
            if (contains(dilate(*pred, mid), truths[i])) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        minima.push_back(lo);
    }
    return minima;
}

DilationBaseline calibrate_dilation(const SegmentationModel& model, std::size_t base_index,
                                    std::span<const BinaryMask> truths, double level,
                                    std::uint32_t d_max) {
    if (!(level > 0.0 && level < 1.0)) {
        throw Error("calibrate_dilation: level must lie strictly in (0, 1)");
    }
    if (truths.empty()) {
        throw Error("calibrate_dilation: no calibration data");
    }
    const std::vector<std::uint32_t> minima = dilation_minima(model, base_index, truths, d_max);
    std::vector<double> as_double(minima.begin(), minima.end());
    const double q = empirical_quantile(as_double, level);
    if (q > static_cast<double>(d_max)) {
        throw InfeasibleError("calibrate_dilation: the level-" + std::to_string(level) +
                              " margin quantile is censored at d_max=" + std::to_string(d_max) +
                              "; raise d_max or lower the level");
    }
    DilationBaseline out;
    out.base_index = base_index;
    out.d_hat = static_cast<std::uint32_t>(q);
    out.quantile_level = level;
    return out;
}

std::optional<BinaryMask> predict_dilation(const DilationBaseline& baseline,
                                           const SegmentationModel& model, std::size_t query) {
    const std::optional<BinaryMask> pred = model.predict(query, baseline.base_index);
    if (!pred.has_value() || pred->is_empty()) {
        return std::nullopt;
    }
    return dilate(*pred, baseline.d_hat);
}

} // namespace confseg
