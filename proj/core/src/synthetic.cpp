#include "confseg/synthetic.hpp"

#include "confseg/errors.hpp"
#include "confseg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace confseg {

namespace {

/// In-place box filter with half-width `s` along both axes (separable sliding
/// window, zero padding outside the image), then rescaling so an iid-noise
/// input keeps its standard deviation.
void smooth_noise(std::vector<double>& field, std::uint32_t w, std::uint32_t h, std::uint32_t s) {
    if (s == 0) {
        return;
    }
    const double window = 2.0 * s + 1.0;
    std::vector<double> tmp(field.size(), 0.0);

    for (std::uint32_t y = 0; y < h; ++y) {
        double acc = 0.0;
        const double* row = field.data() + std::size_t{y} * w;
        double* out = tmp.data() + std::size_t{y} * w;
        for (std::uint32_t x = 0; x < std::min(s, w); ++x) {
            acc += row[x];
        }
        for (std::uint32_t x = 0; x < w; ++x) {
            if (x + s < w) {
                acc += row[x + s];
            }
            out[x] = acc / window;
            if (x >= s) {
                acc -= row[x - s];
            }
        }
    }
    for (std::uint32_t x = 0; x < w; ++x) {
        double acc = 0.0;
        for (std::uint32_t y = 0; y < std::min(s, h); ++y) {
            acc += tmp[std::size_t{y} * w + x];
        }
        for (std::uint32_t y = 0; y < h; ++y) {
            if (y + s < h) {
                acc += tmp[std::size_t{y + s} * w + x];
            }
            field[std::size_t{y} * w + x] = acc / window;
            if (y >= s) {
                acc -= tmp[std::size_t{y - s} * w + x];
            }
        }
    }
    // An iid input loses a factor of `window` in sd; restore it.
    const double scale = window;
    for (double& v : field) {
        v *= scale;
    }
}

std::vector<BinaryMask> connected_components(const std::vector<std::uint8_t>& bits,
                                             std::uint32_t w, std::uint32_t h) {
    std::vector<BinaryMask> components;
    std::vector<std::uint8_t> visited(bits.size(), 0);
    std::vector<std::uint32_t> stack;
    std::vector<std::uint8_t> member(bits.size(), 0);
    for (std::uint32_t start = 0; start < bits.size(); ++start) {
        if (!bits[start] || visited[start]) {
            continue;
        }
        std::fill(member.begin(), member.end(), std::uint8_t{0});
        stack.clear();
        stack.push_back(start);
        visited[start] = 1;
        while (!stack.empty()) {
            const std::uint32_t p = stack.back();
            stack.pop_back();
            member[p] = 1;
            const std::uint32_t x = p % w;
            const std::uint32_t y = p / w;
            const std::uint32_t neighbors[4] = {x > 0 ? p - 1 : p, x + 1 < w ? p + 1 : p,
                                                y > 0 ? p - w : p, y + 1 < h ? p + w : p};
            for (std::uint32_t q : neighbors) {
                if (q != p && bits[q] && !visited[q]) {
                    visited[q] = 1;
                    stack.push_back(q);
                }
            }
        }
        components.push_back(BinaryMask::from_bits(w, h, member));
    }
    return components;
}

SyntheticScene try_generate(const SceneParams& params, std::uint64_t seed) {
    const std::uint32_t w = params.width;
    const std::uint32_t h = params.height;
    Rng rng(seed);

    SyntheticScene scene;
    scene.width = w;
    scene.height = h;
    scene.noise_sigma = params.noise_sigma_lo +
                        (params.noise_sigma_hi - params.noise_sigma_lo) * rng.uniform();
    scene.truth_field.assign(std::size_t{w} * h, 0.0);

    for (std::uint32_t b = 0; b < params.n_blobs; ++b) {
        const double cx = rng.uniform(0.0, static_cast<double>(w));
        const double cy = rng.uniform(0.0, static_cast<double>(h));
        const double sigma = params.blob_scale * rng.uniform(0.6, 1.4);
        const double amp = rng.uniform(0.75, 1.05);
        const double inv = 1.0 / (2.0 * sigma * sigma);
        for (std::uint32_t y = 0; y < h; ++y) {
            const double dy = static_cast<double>(y) - cy;
            for (std::uint32_t x = 0; x < w; ++x) {
                const double dx = static_cast<double>(x) - cx;
                scene.truth_field[std::size_t{y} * w + x] += amp * std::exp(-(dx * dx + dy * dy) * inv);
            }
        }
    }

    std::vector<std::uint8_t> truth_bits(scene.truth_field.size(), 0);
    for (std::size_t i = 0; i < truth_bits.size(); ++i) {
        truth_bits[i] = scene.truth_field[i] > kTruthLevel ? 1 : 0;
    }
    scene.truth_instances = connected_components(truth_bits, w, h);

    scene.score_field = scene.truth_field;
    if (scene.noise_sigma > 0.0) {
        std::vector<double> noise(scene.truth_field.size());
        for (double& v : noise) {
            v = rng.normal();
        }
        smooth_noise(noise, w, h, params.smoothing);
        for (std::size_t i = 0; i < noise.size(); ++i) {
            scene.score_field[i] += scene.noise_sigma * noise[i];
        }
    }
    return scene;
}

} // namespace

void SceneParams::validate() const {
    if (width == 0 || height == 0) {
        throw Error("SceneParams: dimensions must be positive");
    }
    if (n_blobs < 1) {
        throw Error("SceneParams: need at least one blob");
    }
    if (noise_sigma_lo < 0.0 || noise_sigma_hi < noise_sigma_lo) {
        throw Error("SceneParams: need 0 <= noise_sigma_lo <= noise_sigma_hi");
    }
}

SyntheticScene generate_scene(const SceneParams& params) {
    params.validate();
    std::uint64_t seed = params.rng_seed;
    for (int attempt = 0; attempt < 8; ++attempt) {
        SyntheticScene scene = try_generate(params, seed);
        if (!scene.truth_instances.empty()) {
            return scene;
        }
        seed = Rng::derive(params.rng_seed, 0xdead0000ULL + static_cast<std::uint64_t>(attempt));
    }
    throw Error("generate_scene: no truth instance after 8 attempts; parameters are degenerate");
}

std::optional<BinaryMask> threshold_model(const SyntheticScene& scene, Pixel pixel, double t) {
    const std::uint32_t w = scene.width;
    const std::uint32_t h = scene.height;
    if (pixel.x >= w || pixel.y >= h) {
        throw Error("threshold_model: pixel out of bounds");
    }
    const std::uint32_t start = pixel.y * w + pixel.x;
    if (!(scene.score_field[start] > t)) {
        return std::nullopt;
    }
    std::vector<std::uint8_t> member(std::size_t{w} * h, 0);
    std::vector<std::uint32_t> stack;
    stack.push_back(start);
    member[start] = 1;
    while (!stack.empty()) {
        const std::uint32_t p = stack.back();
        stack.pop_back();
        const std::uint32_t x = p % w;
        const std::uint32_t y = p / w;
        const std::uint32_t neighbors[4] = {x > 0 ? p - 1 : p, x + 1 < w ? p + 1 : p,
                                            y > 0 ? p - w : p, y + 1 < h ? p + w : p};
        for (std::uint32_t q : neighbors) {
            if (q != p && !member[q] && scene.score_field[q] > t) {
                member[q] = 1;
                stack.push_back(q);
            }
        }
    }
    return BinaryMask::from_bits(w, h, member);
}

std::vector<QuerySample> make_dataset(const SceneParams& params, std::size_t n_queries,
                                      std::uint64_t seed, std::size_t queries_per_scene) {
    params.validate();
    if (n_queries < 1) {
        throw Error("make_dataset: need at least one query");
    }
    if (queries_per_scene < 1) {
        throw Error("make_dataset: queries_per_scene must be positive");
    }

    std::vector<QuerySample> samples;
    samples.reserve(n_queries);
    Rng pick_rng(Rng::derive(seed, 0x517eb00cULL));
    std::uint64_t scene_index = 0;
    int dry_scenes = 0;
    while (samples.size() < n_queries) {
        SceneParams scene_params = params;
        scene_params.rng_seed = Rng::derive(seed, scene_index++);
        auto scene = std::make_shared<const SyntheticScene>(generate_scene(scene_params));

        std::size_t produced = 0;
        const std::size_t want =
            std::min<std::size_t>(queries_per_scene, n_queries - samples.size());
        for (std::size_t attempt = 0; attempt < 2000 && produced < want; ++attempt) {
            const Pixel p{static_cast<std::uint32_t>(pick_rng.uniform_int(scene->width)),
                          static_cast<std::uint32_t>(pick_rng.uniform_int(scene->height))};
            const BinaryMask* hit = nullptr;
            for (const BinaryMask& inst : scene->truth_instances) {
                if (inst.test(p.x, p.y)) {
                    hit = &inst;
                    break;
                }
            }
            if (hit != nullptr) {
                samples.push_back(QuerySample{scene, p, *hit});
                ++produced;
            }
        }
        if (produced == 0) {
            if (++dry_scenes > 64) {
                throw Error("make_dataset: rejection budget exhausted; truth instances are "
                            "too sparse for these parameters");
            }
        } else {
            dry_scenes = 0;
        }
    }
    return samples;
}

ParameterGrid default_synthetic_grid() {
    return ParameterGrid::linear(0.1, 0.9, 21);
}

SyntheticModel::SyntheticModel(std::vector<QuerySample> samples, ParameterGrid grid)
    : samples_(std::move(samples)), grid_(std::move(grid)) {
    for (const auto& point : grid_.points()) {
        if (point.size() != 1) {
            throw Error("SyntheticModel: expects a scalar threshold grid");
        }
    }
}

std::optional<BinaryMask> SyntheticModel::predict(std::size_t query, std::size_t param) const {
    const QuerySample& s = samples_.at(query);
    return threshold_model(*s.scene, s.pixel, grid_.point(param)[0]);
}

std::vector<BinaryMask> SyntheticModel::truths() const {
    std::vector<BinaryMask> out;
    out.reserve(samples_.size());
    for (const QuerySample& s : samples_) {
        out.push_back(s.truth);
    }
    return out;
}

} // namespace confseg
