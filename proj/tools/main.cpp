// confseg command-line tool: synthetic dataset generation, calibration,
// prediction, evaluation, and the two comparison baselines.
//
// Exit codes: 0 success, 2 infeasible (alpha, tau) or infeasible risk
// threshold, 3 I/O or schema error.

#include "confseg/baselines.hpp"
#include "confseg/conformal.hpp"
#include "confseg/crc.hpp"
#include "confseg/errors.hpp"
#include "confseg/io.hpp"
#include "confseg/report.hpp"
#include "confseg/synthetic.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

namespace {

using namespace confseg;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInfeasible = 2;
constexpr int kExitIo = 3;

struct SimulateArgs {
    std::uint64_t seed = 1;
    std::string params_path;
    std::string out_path;
    std::size_t n_queries = 200;
    std::size_t queries_per_scene = 1;
    std::string grid_spec;
};

struct CalibrateArgs {
    std::string data_path;
    double alpha = 0.2;
    double tau = 0.7;
    double eta = 0.9;
    std::string algo = "setcover";
    double split_frac = 0.5;
    std::uint64_t seed = 1;
    std::string out_selector;
    std::string matrix_cache;
};

struct PredictArgs {
    std::string selector_path;
    std::string data_path;
    std::string query_id;
    std::string out_path;
};

struct EvaluateArgs {
    std::string selector_path;
    std::string test_data_path;
    std::string report_path;
    std::string csv_path;
    std::optional<double> threshold;
};

struct BaselineArgs {
    std::string kind = "single";
    std::string data_path;
    std::string test_data_path;
    std::string report_path;
    double alpha = 0.2;
    double tau = 0.7;
    double level = 0.8;
    std::uint32_t d_max = 30;
};

SceneParams read_scene_params(const std::string& path) {
    SceneParams p;
    if (path.empty()) {
        return p;
    }
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open params file " + path);
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw IoError("parse error in " + path + " at byte " + std::to_string(e.byte) + ": " +
                      e.what());
    }
    p.width = j.value("width", p.width);
    p.height = j.value("height", p.height);
    p.n_blobs = j.value("n_blobs", p.n_blobs);
    p.blob_scale = j.value("blob_scale", p.blob_scale);
    p.noise_sigma_lo = j.value("noise_sigma_lo", p.noise_sigma_lo);
    p.noise_sigma_hi = j.value("noise_sigma_hi", p.noise_sigma_hi);
    p.smoothing = j.value("smoothing", p.smoothing);
    return p;
}

ParameterGrid parse_grid_spec(const std::string& spec) {
    if (spec.empty()) {
        return default_synthetic_grid();
    }
    std::vector<std::vector<double>> points;
    std::stringstream ss(spec);
    std::string token;
    while (std::getline(ss, token, ',')) {
        points.push_back({std::stod(token)});
    }
    return ParameterGrid(std::move(points));
}

json mask_json(const BinaryMask& m) {
    json runs = json::array();
    for (const Run& r : m.runs()) {
        runs.push_back({r.start, r.length});
    }
    return json{{"w", m.width()}, {"h", m.height()}, {"runs", std::move(runs)}};
}

int run_simulate(const SimulateArgs& args) {
    SceneParams params = read_scene_params(args.params_path);
    const ParameterGrid grid = parse_grid_spec(args.grid_spec);
    const auto samples =
        make_dataset(params, args.n_queries, args.seed, args.queries_per_scene);
    DatasetManifest manifest = manifest_from_synthetic(samples, grid);
    save_manifest(manifest, args.out_path);
    std::cout << "wrote " << manifest.records.size() << " queries over a " << grid.size()
              << "-point grid to " << args.out_path << "\n";
    return kExitOk;
}

int run_calibrate(const CalibrateArgs& args) {
    const auto manifest = std::make_shared<const DatasetManifest>(load_manifest(args.data_path));
    const ConformalConfig cfg{args.alpha, args.tau, args.eta};
    cfg.validate();
    const auto ids = manifest->ids();
    const auto truths = manifest->truths();

    if (args.algo == "crc") {
        if (!manifest->has_masks()) {
            throw IoError("crc calibration needs prediction masks; this manifest is score-only");
        }
        const ManifestModel model(manifest);
        std::size_t n1 = static_cast<std::size_t>(args.split_frac *
                                                  static_cast<double>(truths.size()));
        n1 = std::clamp<std::size_t>(n1, 1, truths.size() - 1);
        CrcSelector sel = calibrate_crc(model, truths, cfg, n1, args.seed);
        sel.calibration_ids = ids;
        if (!args.out_selector.empty()) {
            save_selector(sel, args.out_selector);
        }
        if (!sel.lambda_hat.has_value()) {
            std::cerr << "infeasible: no ranked prefix reached risk <= alpha - (1-alpha)/n2; "
                         "increase alpha, lower tau, or widen the grid\n";
            return kExitInfeasible;
        }
        std::cout << "lambda_hat=" << *sel.lambda_hat << " r_hat="
                  << sel.risk_curve[*sel.lambda_hat - 1] << " selector=" << args.out_selector
                  << "\n";
        return kExitOk;
    }
    if (args.algo != "setcover") {
        throw CLI::ValidationError("--algo must be setcover or crc");
    }

    IoUMatrix matrix;
    const bool cache_exists =
        !args.matrix_cache.empty() && std::filesystem::exists(args.matrix_cache);
    if (cache_exists) {
        matrix = load_matrix_csv(args.matrix_cache, manifest->grid, ids);
    } else if (manifest->has_masks()) {
        matrix = build_iou_matrix(ManifestModel(manifest), truths);
    } else {
        matrix = matrix_from_scores(*manifest);
    }
    if (!args.matrix_cache.empty() && !cache_exists) {
        save_matrix_csv(matrix, manifest->grid, ids, args.matrix_cache);
    }

    const SuccessSets ss = success_sets(matrix, cfg.tau);
    const FeasibilityReport feas = feasibility_check(ss, cfg.alpha, ss.n);
    std::cout << "coverable " << feas.max_coverable << "/" << feas.required
              << " required points; best single coverage " << feas.best_single_coverage << "\n";

    CalibratedSelector sel = calibrate(ss, cfg, manifest->grid);
    sel.calibration_ids = ids;
    if (manifest->has_masks()) {
        sel = recalibrate(sel, ManifestModel(manifest), truths);
        std::cout << "selected " << sel.j_indices.size() << " grid points; theta_tilde="
                  << *sel.theta_tilde << "\n";
    } else {
        std::cout << "selected " << sel.j_indices.size()
                  << " grid points; score-only data, skipping re-calibration\n";
    }
    if (!args.out_selector.empty()) {
        save_selector(sel, args.out_selector);
    }
    return kExitOk;
}

int run_predict(const PredictArgs& args) {
    const AnySelector any = load_selector(args.selector_path);
    const auto manifest = std::make_shared<const DatasetManifest>(load_manifest(args.data_path));
    if (!manifest->has_masks()) {
        throw IoError("predict needs prediction masks; this manifest is score-only");
    }
    const ManifestModel model(manifest);

    std::size_t query = manifest->records.size();
    for (std::size_t i = 0; i < manifest->records.size(); ++i) {
        if (manifest->records[i].query_id == args.query_id) {
            query = i;
            break;
        }
    }
    if (query == manifest->records.size()) {
        throw IoError("query '" + args.query_id + "' not found in " + args.data_path);
    }

    const PredictionSet set = std::holds_alternative<CalibratedSelector>(any)
                                  ? predict(std::get<CalibratedSelector>(any), model, query)
                                  : predict_crc(std::get<CrcSelector>(any), model, query);

    json out;
    out["query_id"] = args.query_id;
    out["size"] = set.size();
    out["source_indices"] = set.source_indices;
    out["minimal"] = set.minimal;
    json masks = json::array();
    for (const BinaryMask& m : set.masks) {
        masks.push_back(mask_json(m));
    }
    out["masks"] = std::move(masks);
    if (args.out_path.empty()) {
        std::cout << out.dump(1) << "\n";
    } else {
        atomic_write_text(args.out_path, out.dump(1));
    }
    return kExitOk;
}

int run_evaluate(const EvaluateArgs& args) {
    const AnySelector any = load_selector(args.selector_path);
    const auto manifest =
        std::make_shared<const DatasetManifest>(load_manifest(args.test_data_path));
    const auto truths = manifest->truths();
    const auto ids = manifest->ids();

    EvaluationReport report;
    if (std::holds_alternative<CalibratedSelector>(any)) {
        const auto& sel = std::get<CalibratedSelector>(any);
        if (!manifest->has_masks()) {
            throw IoError("evaluate needs prediction masks for duplicate removal; "
                          "this manifest is score-only");
        }
        report = evaluate(sel, ManifestModel(manifest), truths, ids, args.threshold);
    } else {
        const auto& sel = std::get<CrcSelector>(any);
        if (!manifest->has_masks()) {
            throw IoError("evaluate needs prediction masks for duplicate removal; "
                          "this manifest is score-only");
        }
        report = evaluate(sel, ManifestModel(manifest), truths, ids, args.threshold);
    }

    save_report_json(report, args.report_path);
    if (!args.csv_path.empty()) {
        save_report_csv(report, args.csv_path);
    }
    std::cout << "coverage " << report.empirical_coverage << " over " << report.rows.size()
              << " queries (threshold " << report.threshold
              << (report.comparison == Comparison::kGreaterEqual ? ", >=" : ", >") << ")\n";
    return kExitOk;
}

int run_baseline(const BaselineArgs& args) {
    const auto calib = std::make_shared<const DatasetManifest>(load_manifest(args.data_path));
    const auto test = std::make_shared<const DatasetManifest>(load_manifest(args.test_data_path));
    if (!(calib->grid == test->grid)) {
        throw IoError("baseline: calibration and test manifests use different grids");
    }
    const auto calib_truths = calib->truths();
    const auto test_truths = test->truths();

    const IoUMatrix calib_matrix = calib->has_masks()
                                       ? build_iou_matrix(ManifestModel(calib), calib_truths)
                                       : matrix_from_scores(*calib);
    const SuccessSets ss = success_sets(calib_matrix, args.tau);
    const SingleParamBaseline single = best_single_parameter(ss);

    EvaluationReport report;
    report.config = ConformalConfig{args.alpha, args.tau, 0.9};
    report.threshold = args.tau;
    report.comparison = Comparison::kGreater;

    if (args.kind == "single") {
        report.selector_kind = "baseline-single";
        const IoUMatrix test_matrix = test->has_masks()
                                          ? build_iou_matrix(ManifestModel(test), test_truths)
                                          : matrix_from_scores(*test);
        std::size_t covered = 0;
        for (std::size_t i = 0; i < test_matrix.n; ++i) {
            QueryRow row;
            row.id = test->records[i].query_id;
            row.max_iou = test_matrix.at(i, single.best_index);
            row.set_size = row.max_iou > 0.0 ? 1 : 0;
            row.covered = row.max_iou > args.tau;
            covered += row.covered ? 1 : 0;
            report.set_size_histogram[row.set_size] += 1;
            report.mean_set_size += static_cast<double>(row.set_size);
            report.rows.push_back(std::move(row));
        }
        report.empirical_coverage =
            static_cast<double>(covered) / static_cast<double>(test_matrix.n);
        report.mean_set_size /= static_cast<double>(test_matrix.n);
        report.single_param = SingleParamBlock{single.best_index,
                                               calib->grid.point(single.best_index),
                                               single.calib_coverage,
                                               report.empirical_coverage};
        save_report_json(report, args.report_path);
        std::cout << "single-parameter baseline: index " << single.best_index
                  << ", calibration coverage " << single.calib_coverage << ", test coverage "
                  << report.empirical_coverage << "\n";
        return kExitOk;
    }
    if (args.kind != "dilation") {
        throw CLI::ValidationError("--kind must be single or dilation");
    }

    if (!calib->has_masks() || !test->has_masks()) {
        throw IoError("dilation baseline needs prediction masks on both manifests");
    }
    report.selector_kind = "baseline-dilation";
    const ManifestModel calib_model(calib);
    const ManifestModel test_model(test);
    const DilationBaseline dil =
        calibrate_dilation(calib_model, single.best_index, calib_truths, args.level, args.d_max);

    const auto minima = dilation_minima(calib_model, single.best_index, calib_truths, args.d_max);
    std::size_t contained = 0;
    for (std::uint32_t m : minima) {
        contained += m <= dil.d_hat ? 1 : 0;
    }

    std::size_t covered = 0;
    for (std::size_t i = 0; i < test_truths.size(); ++i) {
        QueryRow row;
        row.id = test->records[i].query_id;
        const auto pred = predict_dilation(dil, test_model, i);
        row.set_size = pred.has_value() ? 1 : 0;
        row.max_iou = pred.has_value() ? iou(test_truths[i], *pred) : 0.0;
        row.covered = row.max_iou > args.tau;
        covered += row.covered ? 1 : 0;
        report.set_size_histogram[row.set_size] += 1;
        report.mean_set_size += static_cast<double>(row.set_size);
        report.rows.push_back(std::move(row));
    }
    report.empirical_coverage =
        static_cast<double>(covered) / static_cast<double>(test_truths.size());
    report.mean_set_size /= static_cast<double>(test_truths.size());
    report.dilation = DilationBlock{
        dil.base_index,
        calib->grid.point(dil.base_index),
        dil.d_hat,
        args.level,
        static_cast<double>(contained) / static_cast<double>(minima.size()),
        report.empirical_coverage};
    save_report_json(report, args.report_path);
    std::cout << "dilation baseline: d_hat=" << dil.d_hat << ", calibration containment "
              << report.dilation->calib_containment << ", test IoU coverage "
              << report.empirical_coverage << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"conformal prediction sets for instance segmentation masks"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "generate a synthetic dataset manifest");
    simulate->add_option("--seed", sim.seed, "RNG seed");
    simulate->add_option("--params", sim.params_path, "scene parameter JSON file");
    simulate->add_option("--out", sim.out_path, "output manifest path")->required();
    simulate->add_option("--n-queries", sim.n_queries, "number of query samples");
    simulate->add_option("--queries-per-scene", sim.queries_per_scene,
                         "queries drawn per generated scene (1 = strictly IID)");
    simulate->add_option("--grid", sim.grid_spec,
                         "comma-separated threshold grid (default: 21 points in [0.1, 0.9])");

    CalibrateArgs cal;
    auto* calibrate_cmd = app.add_subcommand("calibrate", "calibrate a selector on a manifest");
    calibrate_cmd->add_option("--data", cal.data_path, "calibration manifest")->required();
    calibrate_cmd->add_option("--alpha", cal.alpha, "error rate in (0,1)")->required();
    calibrate_cmd->add_option("--tau", cal.tau, "IoU target in (0,1)")->required();
    calibrate_cmd->add_option("--eta", cal.eta, "duplicate IoU threshold in (0,1)");
    calibrate_cmd->add_option("--algo", cal.algo, "setcover (default) or crc");
    calibrate_cmd->add_option("--split-frac", cal.split_frac,
                              "crc only: fraction of data used for ranking");
    calibrate_cmd->add_option("--seed", cal.seed, "crc only: split seed");
    calibrate_cmd->add_option("--out-selector", cal.out_selector, "selector output path");
    calibrate_cmd->add_option("--matrix-cache", cal.matrix_cache,
                              "IoU matrix CSV cache (reused when present)");

    PredictArgs pred;
    auto* predict_cmd = app.add_subcommand("predict", "prediction set for one query");
    predict_cmd->add_option("--selector", pred.selector_path, "selector file")->required();
    predict_cmd->add_option("--data", pred.data_path, "manifest holding the query")->required();
    predict_cmd->add_option("--query", pred.query_id, "query id")->required();
    predict_cmd->add_option("--out", pred.out_path, "output path (default: stdout)");

    EvaluateArgs eval;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "coverage report on held-out data");
    evaluate_cmd->add_option("--selector", eval.selector_path, "selector file")->required();
    evaluate_cmd->add_option("--test-data", eval.test_data_path, "test manifest")->required();
    evaluate_cmd->add_option("--report", eval.report_path, "report JSON output")->required();
    evaluate_cmd->add_option("--csv", eval.csv_path, "optional per-query CSV output");
    double threshold_opt = -1.0;
    auto* thr = evaluate_cmd->add_option("--threshold", threshold_opt,
                                         "override the coverage threshold");

    BaselineArgs base;
    auto* baseline_cmd = app.add_subcommand("baseline", "single-parameter or dilation baseline");
    baseline_cmd->add_option("--kind", base.kind, "single or dilation")->required();
    baseline_cmd->add_option("--data", base.data_path, "calibration manifest")->required();
    baseline_cmd->add_option("--test-data", base.test_data_path, "test manifest")->required();
    baseline_cmd->add_option("--report", base.report_path, "report JSON output")->required();
    baseline_cmd->add_option("--alpha", base.alpha, "error rate echoed into the report");
    baseline_cmd->add_option("--tau", base.tau, "IoU target for coverage");
    baseline_cmd->add_option("--level", base.level, "dilation containment level");
    baseline_cmd->add_option("--dmax", base.d_max, "dilation search cap in pixels");

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) {
            return run_simulate(sim);
        }
        if (calibrate_cmd->parsed()) {
            return run_calibrate(cal);
        }
        if (predict_cmd->parsed()) {
            return run_predict(pred);
        }
        if (evaluate_cmd->parsed()) {
            if (thr->count() > 0) {
                eval.threshold = threshold_opt;
            }
            return run_evaluate(eval);
        }
        if (baseline_cmd->parsed()) {
            return run_baseline(base);
        }
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
