#pragma once

#include "confseg/calibration.hpp"
#include "confseg/mask.hpp"

#include <cstddef>
#include <optional>

namespace confseg {

/// A tunable mask predictor bound to an indexed set of queries.
///
/// predict(q, j) plays the role of f(X_q, t_j): the mask the underlying model
/// produces for query q at the j-th grid point, or nullopt when the model
/// yields no mask (treated the same as a zero-area mask everywhere). A model
/// instance is bound to one dataset; calibration-time and test-time queries
/// live in separate instances sharing a grid.
class SegmentationModel {
public:
    virtual ~SegmentationModel() = default;

    virtual std::size_t query_count() const = 0;
    virtual const ParameterGrid& grid() const = 0;
    virtual std::optional<BinaryMask> predict(std::size_t query, std::size_t param) const = 0;
};

} // namespace confseg
