#pragma once

#include "confseg/calibration.hpp"
#include "confseg/mask.hpp"
#include "confseg/model.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

namespace confseg {

struct Pixel {
    std::uint32_t x = 0;
    std::uint32_t y = 0;
};

/// Parameters of one generated scene. The truth field is a sum of radial
/// bumps; truth instances are the 4-connected components of the field above a
/// fixed level of 0.5. The observed score field adds seeded Gaussian noise,
/// box-smoothed over a (2*smoothing+1)^2 window and rescaled back to
/// `noise_sigma` standard deviation, so the parameter controls the boundary
/// perturbation magnitude directly. A per-scene noise level drawn uniformly
/// from [noise_sigma_lo, noise_sigma_hi] makes query difficulty heterogeneous
/// across the dataset.
struct SceneParams {
    std::uint32_t width = 96;
    std::uint32_t height = 96;
    std::uint32_t n_blobs = 4;
    double blob_scale = 13.0;
    double noise_sigma_lo = 0.10;
    double noise_sigma_hi = 0.32;
    std::uint32_t smoothing = 3;
    std::uint64_t rng_seed = 0;

    void validate() const;
};

struct SyntheticScene {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    double noise_sigma = 0.0;               // realized per-scene level
    std::vector<double> truth_field;        // row-major width*height
    std::vector<double> score_field;        // truth_field + smoothed noise
    std::vector<BinaryMask> truth_instances;
};

/// A query pixel together with the truth instance containing it.
struct QuerySample {
    std::shared_ptr<const SyntheticScene> scene;
    Pixel pixel;
    BinaryMask truth;
};

inline constexpr double kTruthLevel = 0.5;

/// Deterministic under params.rng_seed. Scenes whose superlevel set at 0.5 is
/// empty are regenerated from a derived sub-seed, with bounded retries.
SyntheticScene generate_scene(const SceneParams& params);

/// The 4-connected component of {score_field > t} containing `pixel`, or
/// nullopt when the pixel itself scores at most t. Raising t shrinks the
/// component or removes it.
std::optional<BinaryMask> threshold_model(const SyntheticScene& scene, Pixel pixel, double t);

/// Draws `n_queries` samples: scenes from per-index sub-seeds, query pixels
/// uniform over each scene with rejection until they land inside a truth
/// instance. `queries_per_scene` = 1 gives strictly IID samples; larger
/// values reuse each scene for several queries, which is cheaper but induces
/// within-scene dependence.
std::vector<QuerySample> make_dataset(const SceneParams& params, std::size_t n_queries,
                                      std::uint64_t seed, std::size_t queries_per_scene = 1);

/// Default scalar threshold grid for synthetic runs: 21 evenly spaced values
/// in [0.1, 0.9].
ParameterGrid default_synthetic_grid();

/// SegmentationModel over a set of synthetic samples; predict(q, j) extracts
/// the component of sample q's score field at the j-th grid threshold.
class SyntheticModel : public SegmentationModel {
public:
    SyntheticModel(std::vector<QuerySample> samples, ParameterGrid grid);

    std::size_t query_count() const override { return samples_.size(); }
    const ParameterGrid& grid() const override { return grid_; }
    std::optional<BinaryMask> predict(std::size_t query, std::size_t param) const override;

    const std::vector<QuerySample>& samples() const { return samples_; }
    std::vector<BinaryMask> truths() const;

private:
    std::vector<QuerySample> samples_;
    ParameterGrid grid_;
};

} // namespace confseg
