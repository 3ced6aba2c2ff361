#include "confseg/conformal.hpp"
#include "confseg/errors.hpp"

#include "support/oracles.hpp"

#include <doctest.h>

#include <algorithm>

using namespace confseg;
using namespace confseg::testing;

namespace {

SuccessSets sets_of(std::size_t n, double tau,
                    std::initializer_list<std::initializer_list<std::size_t>> sets) {
    SuccessSets ss;
    ss.tau = tau;
    ss.n = n;
    for (const auto& s : sets) {
        Bitset b(n);
        for (std::size_t i : s) {
            b.set(i);
        }
        ss.sets.push_back(std::move(b));
    }
    return ss;
}

BinaryMask row_mask(std::uint32_t w, std::uint32_t h, std::uint32_t from, std::uint32_t len) {
    std::vector<std::uint8_t> bits(std::size_t{w} * h, 0);
    for (std::uint32_t i = 0; i < len; ++i) {
        bits[from + i] = 1;
    }
    return BinaryMask::from_bits(w, h, bits);
}

} // namespace

TEST_CASE("calibrate selects the stated covers") {
    const ParameterGrid grid({{0.1}, {0.5}, {0.9}});
    const ConformalConfig cfg{0.2, 0.5, 0.9};

    SuccessSets single = sets_of(6, 0.5, {{}, {0, 1, 2, 3, 4, 5}, {0}});
    const CalibratedSelector sel = calibrate(single, cfg, grid);
    CHECK(sel.j_indices == std::vector<std::size_t>{1});
    CHECK(sel.grid_points == std::vector<std::vector<double>>{{0.5}});
    CHECK_FALSE(sel.theta_tilde.has_value());

    // Two halves, alpha = 0.05 forces the full union.
    const ParameterGrid grid2({{0.1}, {0.9}});
    SuccessSets halves = sets_of(10, 0.5, {{0, 1, 2, 3, 4}, {5, 6, 7, 8, 9}});
    const CalibratedSelector both = calibrate(halves, ConformalConfig{0.05, 0.5, 0.9}, grid2);
    CHECK(both.j_indices == std::vector<std::size_t>{0, 1});

    // Cover validity: the union of the selected sets reaches the target.
    Bitset covered(10);
    for (std::size_t j : both.j_indices) {
        covered |= halves.sets[j];
    }
    CHECK(covered.count() >= coverage_target(0.05, 10));
}

TEST_CASE("calibrate reports infeasibility with the remedy message") {
    const ParameterGrid grid({{0.1}, {0.9}});
    SuccessSets thin = sets_of(10, 0.8, {{0, 1}, {1, 2}});
    try {
        calibrate(thin, ConformalConfig{0.1, 0.8, 0.9}, grid);
        FAIL("expected InfeasibleError");
    } catch (const InfeasibleError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("increase the error rate alpha") != std::string::npos);
        CHECK(msg.find("lower the IoU target tau") != std::string::npos);
    }
}

TEST_CASE("unique keeps one of identical masks and all of distinct masks") {
    const BinaryMask a = row_mask(32, 4, 0, 16);
    std::vector<MaskCandidate> same = {{a, 0}, {a, 3}, {a, 7}};
    const PredictionSet collapsed = unique(same, 0.9);
    CHECK(collapsed.size() == 1);
    CHECK(collapsed.source_indices == std::vector<std::size_t>{0});
    CHECK(collapsed.minimal);

    const BinaryMask b = row_mask(32, 4, 40, 16);
    const BinaryMask c = row_mask(32, 4, 80, 16);
    std::vector<MaskCandidate> distinct = {{a, 0}, {b, 1}, {c, 2}};
    const PredictionSet kept = unique(distinct, 0.9);
    CHECK(kept.size() == 3);
}

TEST_CASE("unique returns the dominating pair from the worked example") {
    // iou(m1, m2) = 19/20 = 0.95 > 0.9; m3 disjoint from both.
    const BinaryMask m1 = row_mask(64, 4, 0, 20);
    const BinaryMask m2 = row_mask(64, 4, 0, 19);
    const BinaryMask m3 = row_mask(64, 4, 128, 20);
    CHECK(iou(m1, m2) == doctest::Approx(0.95));
    const PredictionSet set = unique({{m1, 0}, {m2, 1}, {m3, 2}}, 0.9);
    REQUIRE(set.size() == 2);
    CHECK(set.masks[0] == m1);
    CHECK(set.masks[1] == m3);
    CHECK(set.source_indices == std::vector<std::size_t>{0, 2});
}

TEST_CASE("unique drops empty candidates and handles empty input") {
    CHECK(unique({}, 0.9).empty());
    std::vector<MaskCandidate> only_empty = {{BinaryMask::empty(8, 8), 0}};
    CHECK(unique(only_empty, 0.9).empty());
}

TEST_CASE("unique is minimal and dominating on random collections") {
    Rng rng(31337);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t m = 2 + rng.uniform_int(7); // up to 8
        const double eta = rng.uniform(0.3, 0.95);
        std::vector<MaskCandidate> cands;
        std::vector<BinaryMask> masks;
        for (std::size_t i = 0; i < m; ++i) {
            // Overlapping rows of similar lengths produce a mix of duplicate
            // and distinct pairs.
            const std::uint32_t from = static_cast<std::uint32_t>(rng.uniform_int(40));
            const std::uint32_t len = 10 + static_cast<std::uint32_t>(rng.uniform_int(30));
            masks.push_back(row_mask(64, 4, from, len));
            cands.push_back({masks.back(), i});
        }
        const PredictionSet set = unique(cands, eta);
        CHECK(set.minimal);
        CHECK(set.size() == brute_force_min_dominating(masks, eta).size());

        // Domination predicate, checked directly.
        for (std::size_t i = 0; i < m; ++i) {
            const bool kept = std::find(set.source_indices.begin(), set.source_indices.end(),
                                        i) != set.source_indices.end();
            if (!kept) {
                bool dominated = false;
                for (const BinaryMask& k : set.masks) {
                    if (iou(masks[i], k) > eta) {
                        dominated = true;
                        break;
                    }
                }
                CHECK(dominated);
            }
        }
    }
}

TEST_CASE("unique falls back to the greedy heuristic above the guard") {
    const BinaryMask a = row_mask(64, 8, 0, 20);
    std::vector<MaskCandidate> many;
    for (std::size_t i = 0; i < 14; ++i) {
        many.push_back({a, i});
    }
    const PredictionSet set = unique(many, 0.9);
    CHECK(set.size() == 1);
    CHECK_FALSE(set.minimal);
}

TEST_CASE("empirical quantile follows the floor((n+1)*alpha) convention") {
    std::vector<double> equal(7, 0.42);
    CHECK(empirical_quantile(equal, 0.3) == 0.42);

    std::vector<double> deciles = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    CHECK(empirical_quantile(deciles, 0.2) == 0.2); // floor(0.2 * 11) = 2nd smallest

    std::vector<double> one = {0.77};
    CHECK(empirical_quantile(one, 0.05) == 0.77);
    CHECK(empirical_quantile(one, 0.95) == 0.77);

    Rng rng(606);
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<double> values;
        const std::size_t n = 1 + rng.uniform_int(200);
        for (std::size_t i = 0; i < n; ++i) {
            values.push_back(rng.uniform());
        }
        const double alpha = rng.uniform(0.01, 0.99);
        CHECK(empirical_quantile(values, alpha) == sorted_quantile(values, alpha));
    }
}

TEST_CASE("recalibrate against a truth oracle and the sort oracle") {
    Rng rng(2024);
    const std::size_t n = 40;
    const ParameterGrid grid({{0.2}, {0.5}, {0.8}});
    const ConformalConfig cfg{0.2, 0.05, 0.9};

    std::vector<BinaryMask> truths;
    std::vector<std::vector<std::optional<BinaryMask>>> oracle_table;
    std::vector<std::vector<std::optional<BinaryMask>>> noisy_table;
    for (std::size_t i = 0; i < n; ++i) {
        const BinaryMask truth = random_mask(rng, 24, 24);
        truths.push_back(truth);
        oracle_table.push_back({truth, truth, truth});
        std::vector<std::optional<BinaryMask>> row;
        for (int j = 0; j < 3; ++j) {
            if (rng.uniform() < 0.1) {
                row.push_back(std::nullopt);
            } else if (rng.uniform() < 0.5) {
                row.emplace_back(truth);
            } else {
                row.emplace_back(random_mask(rng, 24, 24));
            }
        }
        noisy_table.push_back(std::move(row));
    }

    const TableModel oracle(oracle_table, grid);
    const IoUMatrix m1 = build_iou_matrix(oracle, truths);
    const CalibratedSelector s1 = recalibrate(calibrate(success_sets(m1, cfg.tau), cfg, grid),
                                              oracle, truths);
    CHECK(s1.theta_tilde.has_value());
    CHECK(*s1.theta_tilde == 1.0);

    const TableModel noisy(noisy_table, grid);
    const IoUMatrix m2 = build_iou_matrix(noisy, truths);
    const CalibratedSelector base = calibrate(success_sets(m2, cfg.tau), cfg, grid);
    const CalibratedSelector s2 = recalibrate(base, noisy, truths);
    REQUIRE(s2.theta_tilde.has_value());

    // Independent recomputation: oracle dominating sets, then a full sort.
    std::vector<double> scores;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<BinaryMask> present;
        for (std::size_t j : base.j_indices) {
            const auto& p = noisy_table[i][j];
            if (p.has_value() && !p->is_empty()) {
                present.push_back(*p);
            }
        }
        double best = 0.0;
        if (!present.empty()) {
            for (std::size_t pos : brute_force_min_dominating(present, cfg.eta)) {
                best = std::max(best, iou(truths[i], present[pos]));
            }
        }
        scores.push_back(best);
    }
    CHECK(*s2.theta_tilde == sorted_quantile(scores, cfg.alpha));

    // Calibration-side quantile guarantee.
    const std::size_t q = static_cast<std::size_t>(cfg.alpha * static_cast<double>(n + 1));
    std::size_t below = 0;
    for (double s : scores) {
        if (s < *s2.theta_tilde) {
            ++below;
        }
    }
    CHECK(below <= std::max<std::size_t>(q, 1) - 1);
}

TEST_CASE("predict composes raw prediction with dedup") {
    const ParameterGrid grid({{0.2}, {0.5}, {0.8}});
    const ConformalConfig cfg{0.2, 0.05, 0.9};
    const BinaryMask truth = row_mask(32, 8, 0, 24);

    std::vector<std::vector<std::optional<BinaryMask>>> table(
        4, std::vector<std::optional<BinaryMask>>{truth, truth, std::nullopt});
    const TableModel model(table, grid);
    const std::vector<BinaryMask> truths(4, truth);
    const CalibratedSelector sel =
        calibrate(success_sets(build_iou_matrix(model, truths), cfg.tau), cfg, grid);
    REQUIRE(sel.j_indices.size() == 1);

    const auto raw = predict_raw(sel, model, 0);
    CHECK(raw.size() == 1);
    const PredictionSet set = predict(sel, model, 0);
    CHECK(set.size() == 1);
    CHECK(set.size() <= sel.j_indices.size());

    // A model built over a different grid is rejected by fingerprint.
    const ParameterGrid other({{0.25}, {0.5}, {0.8}});
    const TableModel mismatched(table, other);
    CHECK_THROWS_AS(predict_raw(sel, mismatched, 0), Error);
}
