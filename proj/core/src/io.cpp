#include "confseg/io.hpp"

#include "confseg/errors.hpp"

#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>
#include <utility>

namespace confseg {

namespace {

using nlohmann::json;

constexpr int kManifestSchema = 1;
constexpr int kSelectorSchema = 1;
constexpr int kReportSchema = 1;

json mask_to_json(const BinaryMask& m) {
    json runs = json::array();
    for (const Run& r : m.runs()) {
        runs.push_back({r.start, r.length});
    }
    return json{{"w", m.width()}, {"h", m.height()}, {"runs", std::move(runs)}};
}

BinaryMask mask_from_json(const json& j, const std::string& where) {
    try {
        std::vector<Run> runs;
        for (const auto& entry : j.at("runs")) {
            if (!entry.is_array() || entry.size() != 2) {
                throw Error("run entries must be [start, length] pairs");
            }
            runs.push_back(Run{entry[0].get<std::uint32_t>(), entry[1].get<std::uint32_t>()});
        }
        return BinaryMask(j.at("w").get<std::uint32_t>(), j.at("h").get<std::uint32_t>(),
                          std::move(runs));
    } catch (const std::exception& e) {
        throw IoError("malformed RLE mask in " + where + ": " + e.what());
    }
}

json grid_to_json(const ParameterGrid& grid) {
    json out = json::array();
    for (const auto& p : grid.points()) {
        out.push_back(p);
    }
    return out;
}

ParameterGrid grid_from_json(const json& j, const std::string& where) {
    try {
        std::vector<std::vector<double>> points;
        for (const auto& p : j) {
            points.push_back(p.get<std::vector<double>>());
        }
        return ParameterGrid(std::move(points));
    } catch (const std::exception& e) {
        throw IoError("malformed grid in " + where + ": " + e.what());
    }
}

json parse_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw IoError("parse error in " + path.string() + " at byte " + std::to_string(e.byte) +
                      ": " + e.what());
    }
}

void check_schema(const json& j, int expected, const std::filesystem::path& path) {
    const int version = j.value("schema_version", -1);
    if (version != expected) {
        throw IoError(path.string() + ": schema_version " + std::to_string(version) +
                      " not supported (expected " + std::to_string(expected) + ")");
    }
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string grid_point_label(const std::vector<double>& point) {
    std::string label;
    for (std::size_t c = 0; c < point.size(); ++c) {
        if (c > 0) {
            label += '|';
        }
        label += format_double(point[c]);
    }
    return label;
}

json config_to_json(const ConformalConfig& c) {
    return json{{"alpha", c.alpha}, {"tau", c.tau}, {"eta", c.eta}};
}

ConformalConfig config_from_json(const json& j) {
    ConformalConfig c;
    c.alpha = j.at("alpha").get<double>();
    c.tau = j.at("tau").get<double>();
    c.eta = j.at("eta").get<double>();
    return c;
}

} // namespace

std::vector<std::string> DatasetManifest::ids() const {
    std::vector<std::string> out;
    out.reserve(records.size());
    for (const ManifestRecord& r : records) {
        out.push_back(r.query_id);
    }
    return out;
}

std::vector<BinaryMask> DatasetManifest::truths() const {
    std::vector<BinaryMask> out;
    out.reserve(records.size());
    for (const ManifestRecord& r : records) {
        out.push_back(r.truth);
    }
    return out;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
    const json j = parse_file(path);
    check_schema(j, kManifestSchema, path);

    DatasetManifest m;
    try {
        m.mode = j.at("mode").get<std::string>();
        if (m.mode != "synthetic" && m.mode != "precomputed") {
            throw IoError(path.string() + ": unknown mode '" + m.mode + "'");
        }
        m.grid = grid_from_json(j.at("grid"), path.string());
        const std::size_t k = m.grid.size();

        std::unordered_set<std::string> seen_ids;
        for (const auto& rec : j.at("records")) {
            ManifestRecord r;
            r.query_id = rec.at("query_id").get<std::string>();
            if (!seen_ids.insert(r.query_id).second) {
                throw IoError(path.string() + ": duplicate query_id '" + r.query_id + "'");
            }
            r.truth = mask_from_json(rec.at("truth"), "record '" + r.query_id + "'");
            if (r.truth.is_empty()) {
                throw IoError(path.string() + ": record '" + r.query_id +
                              "' has an empty truth mask");
            }
            if (rec.contains("predictions")) {
                const auto& preds = rec.at("predictions");
                if (preds.size() != k) {
                    throw IoError(path.string() + ": record '" + r.query_id + "' has " +
                                  std::to_string(preds.size()) + " predictions for a " +
                                  std::to_string(k) + "-point grid");
                }
                for (const auto& p : preds) {
                    if (p.is_null()) {
                        r.predictions.push_back(std::nullopt);
                    } else {
                        r.predictions.push_back(
                            mask_from_json(p, "record '" + r.query_id + "'"));
                    }
                }
            } else if (rec.contains("scores")) {
                r.scores = rec.at("scores").get<std::vector<double>>();
                if (r.scores.size() != k) {
                    throw IoError(path.string() + ": record '" + r.query_id + "' has " +
                                  std::to_string(r.scores.size()) + " scores for a " +
                                  std::to_string(k) + "-point grid");
                }
            } else {
                throw IoError(path.string() + ": record '" + r.query_id +
                              "' carries neither predictions nor scores");
            }
            m.records.push_back(std::move(r));
        }
        if (m.records.empty()) {
            throw IoError(path.string() + ": manifest has no records");
        }
        const bool masks = m.records.front().has_masks();
        for (const ManifestRecord& r : m.records) {
            if (r.has_masks() != masks) {
                throw IoError(path.string() + ": records mix mask and score-only storage");
            }
        }
    } catch (const IoError&) {
        throw;
    } catch (const std::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
    return m;
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
    json j;
    j["schema_version"] = kManifestSchema;
    j["mode"] = manifest.mode;
    j["grid"] = grid_to_json(manifest.grid);
    json records = json::array();
    for (const ManifestRecord& r : manifest.records) {
        json rec;
        rec["query_id"] = r.query_id;
        rec["truth"] = mask_to_json(r.truth);
        if (r.has_masks()) {
            json preds = json::array();
            for (const auto& p : r.predictions) {
                preds.push_back(p.has_value() ? mask_to_json(*p) : json());
            }
            rec["predictions"] = std::move(preds);
        } else {
            rec["scores"] = r.scores;
        }
        records.push_back(std::move(rec));
    }
    j["records"] = std::move(records);
    atomic_write_text(path, j.dump(1));
}

DatasetManifest manifest_from_synthetic(const std::vector<QuerySample>& samples,
                                        const ParameterGrid& grid) {
    DatasetManifest m;
    m.mode = "synthetic";
    m.grid = grid;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        ManifestRecord r;
        char id[16];
        std::snprintf(id, sizeof(id), "q%05zu", i);
        r.query_id = id;
        r.truth = samples[i].truth;
        for (std::size_t j = 0; j < grid.size(); ++j) {
            auto pred = threshold_model(*samples[i].scene, samples[i].pixel, grid.point(j)[0]);
            if (pred.has_value() && pred->is_empty()) {
                pred.reset();
            }
            r.predictions.push_back(std::move(pred));
        }
        m.records.push_back(std::move(r));
    }
    return m;
}

ManifestModel::ManifestModel(std::shared_ptr<const DatasetManifest> manifest)
    : manifest_(std::move(manifest)) {
    if (!manifest_->has_masks()) {
        throw Error("ManifestModel: manifest is score-only; prediction masks are unavailable");
    }
}

std::optional<BinaryMask> ManifestModel::predict(std::size_t query, std::size_t param) const {
    return manifest_->records.at(query).predictions.at(param);
}

IoUMatrix matrix_from_scores(const DatasetManifest& manifest) {
    IoUMatrix m;
    m.n = manifest.records.size();
    m.k = manifest.grid.size();
    m.scores.reserve(m.n * m.k);
    for (const ManifestRecord& r : manifest.records) {
        if (r.scores.size() != m.k) {
            throw Error("matrix_from_scores: record '" + r.query_id + "' has no score row");
        }
        m.scores.insert(m.scores.end(), r.scores.begin(), r.scores.end());
    }
    return m;
}

void save_selector(const CalibratedSelector& sel, const std::filesystem::path& path) {
    json j;
    j["schema_version"] = kSelectorSchema;
    j["kind"] = "setcover";
    j["alpha"] = sel.config.alpha;
    j["tau"] = sel.config.tau;
    j["eta"] = sel.config.eta;
    j["j_indices"] = sel.j_indices;
    j["grid_points"] = sel.grid_points;
    j["theta_tilde"] = sel.theta_tilde.has_value() ? json(*sel.theta_tilde) : json();
    j["grid_fingerprint"] = sel.grid_fingerprint;
    j["calibration_ids"] = sel.calibration_ids;
    atomic_write_text(path, j.dump(1));
}

void save_selector(const CrcSelector& sel, const std::filesystem::path& path) {
    json j;
    j["schema_version"] = kSelectorSchema;
    j["kind"] = "crc";
    j["alpha"] = sel.config.alpha;
    j["tau"] = sel.config.tau;
    j["eta"] = sel.config.eta;
    j["ranked"] = sel.ranked;
    j["lambda_hat"] = sel.lambda_hat.has_value() ? json(*sel.lambda_hat) : json();
    j["risk_curve"] = sel.risk_curve;
    j["grid_points"] = sel.grid_points;
    j["grid_fingerprint"] = sel.grid_fingerprint;
    j["calibration_ids"] = sel.calibration_ids;
    atomic_write_text(path, j.dump(1));
}

AnySelector load_selector(const std::filesystem::path& path) {
    const json j = parse_file(path);
    check_schema(j, kSelectorSchema, path);
    try {
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "setcover") {
            CalibratedSelector sel;
            sel.config = config_from_json(j);
            sel.j_indices = j.at("j_indices").get<std::vector<std::size_t>>();
            sel.grid_points = j.at("grid_points").get<std::vector<std::vector<double>>>();
            if (!j.at("theta_tilde").is_null()) {
                sel.theta_tilde = j.at("theta_tilde").get<double>();
            }
            sel.grid_fingerprint = j.at("grid_fingerprint").get<std::string>();
            sel.calibration_ids = j.at("calibration_ids").get<std::vector<std::string>>();
            if (sel.j_indices.empty()) {
                throw IoError(path.string() + ": selector has no grid indices");
            }
            return sel;
        }
        if (kind == "crc") {
            CrcSelector sel;
            sel.config = config_from_json(j);
            sel.ranked = j.at("ranked").get<std::vector<std::size_t>>();
            if (!j.at("lambda_hat").is_null()) {
                sel.lambda_hat = j.at("lambda_hat").get<std::size_t>();
            }
            sel.risk_curve = j.at("risk_curve").get<std::vector<double>>();
            sel.grid_points = j.at("grid_points").get<std::vector<std::vector<double>>>();
            sel.grid_fingerprint = j.at("grid_fingerprint").get<std::string>();
            sel.calibration_ids = j.at("calibration_ids").get<std::vector<std::string>>();
            return sel;
        }
        throw IoError(path.string() + ": unknown selector kind '" + kind + "'");
    } catch (const IoError&) {
        throw;
    } catch (const std::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

void save_matrix_csv(const IoUMatrix& matrix, const ParameterGrid& grid,
                     std::span<const std::string> ids, const std::filesystem::path& path) {
    if (matrix.k != grid.size() || matrix.n != ids.size()) {
        throw Error("save_matrix_csv: matrix does not match grid/ids");
    }
    std::string out = "query_id";
    for (const auto& p : grid.points()) {
        out += ',';
        out += grid_point_label(p);
    }
    out += '\n';
    for (std::size_t i = 0; i < matrix.n; ++i) {
        out += ids[i];
        for (std::size_t j = 0; j < matrix.k; ++j) {
            out += ',';
            out += format_double(matrix.at(i, j));
        }
        out += '\n';
    }
    atomic_write_text(path, out);
}

IoUMatrix load_matrix_csv(const std::filesystem::path& path, const ParameterGrid& expected_grid,
                          std::span<const std::string> expected_ids) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw IoError(path.string() + ": empty matrix cache");
    }
    std::string expected_header = "query_id";
    for (const auto& p : expected_grid.points()) {
        expected_header += ',';
        expected_header += grid_point_label(p);
    }
    if (line != expected_header) {
        throw IoError(path.string() + ": matrix cache header does not match the active grid");
    }

    IoUMatrix m;
    m.k = expected_grid.size();
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::stringstream ss(line);
        std::string cell;
        if (!std::getline(ss, cell, ',')) {
            throw IoError(path.string() + ": malformed row " + std::to_string(row));
        }
        if (row >= expected_ids.size() || cell != expected_ids[row]) {
            throw IoError(path.string() + ": row " + std::to_string(row) +
                          " does not match the dataset's query ids");
        }
        for (std::size_t j = 0; j < m.k; ++j) {
            if (!std::getline(ss, cell, ',')) {
                throw IoError(path.string() + ": row " + std::to_string(row) + " is short");
            }
            double value = 0.0;
            const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), value);
            if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
                throw IoError(path.string() + ": bad value '" + cell + "' at row " +
                              std::to_string(row));
            }
            m.scores.push_back(value);
        }
        ++row;
    }
    if (row != expected_ids.size()) {
        throw IoError(path.string() + ": expected " + std::to_string(expected_ids.size()) +
                      " rows, found " + std::to_string(row));
    }
    m.n = row;
    return m;
}

void save_report_json(const EvaluationReport& report, const std::filesystem::path& path) {
    json j;
    j["schema_version"] = kReportSchema;
    j["selector_kind"] = report.selector_kind;
    j["config"] = config_to_json(report.config);
    j["theta_tilde"] = report.theta_tilde.has_value() ? json(*report.theta_tilde) : json();
    j["lambda_hat"] = report.lambda_hat.has_value() ? json(*report.lambda_hat) : json();
    j["threshold"] = report.threshold;
    j["comparison"] = report.comparison == Comparison::kGreaterEqual ? ">=" : ">";
    j["n_test"] = report.rows.size();
    j["empirical_coverage"] = report.empirical_coverage;
    j["mean_set_size"] = report.mean_set_size;
    json hist = json::object();
    for (const auto& [size, count] : report.set_size_histogram) {
        hist[std::to_string(size)] = count;
    }
    j["set_size_histogram"] = std::move(hist);
    json rows = json::array();
    for (const QueryRow& row : report.rows) {
        rows.push_back({{"query_id", row.id},
                        {"max_iou", row.max_iou},
                        {"set_size", row.set_size},
                        {"covered", row.covered}});
    }
    j["rows"] = std::move(rows);
    if (report.single_param.has_value()) {
        const auto& b = *report.single_param;
        j["baselines"]["single_parameter"] = {{"best_index", b.best_index},
                                              {"point", b.point},
                                              {"calib_coverage", b.calib_coverage},
                                              {"test_coverage", b.test_coverage}};
    }
    if (report.dilation.has_value()) {
        const auto& b = *report.dilation;
        j["baselines"]["dilation"] = {{"base_index", b.base_index},
                                      {"point", b.point},
                                      {"d_hat", b.d_hat},
                                      {"level", b.level},
                                      {"calib_containment", b.calib_containment},
                                      {"test_coverage", b.test_coverage}};
    }
    atomic_write_text(path, j.dump(1));
}

EvaluationReport load_report_json(const std::filesystem::path& path) {
    const json j = parse_file(path);
    check_schema(j, kReportSchema, path);
    try {
        EvaluationReport report;
        report.selector_kind = j.at("selector_kind").get<std::string>();
        report.config = config_from_json(j.at("config"));
        if (!j.at("theta_tilde").is_null()) {
            report.theta_tilde = j.at("theta_tilde").get<double>();
        }
        if (!j.at("lambda_hat").is_null()) {
            report.lambda_hat = j.at("lambda_hat").get<std::size_t>();
        }
        report.threshold = j.at("threshold").get<double>();
        report.comparison = j.at("comparison").get<std::string>() == ">="
                                ? Comparison::kGreaterEqual
                                : Comparison::kGreater;
        report.empirical_coverage = j.at("empirical_coverage").get<double>();
        report.mean_set_size = j.at("mean_set_size").get<double>();
        for (const auto& [key, value] : j.at("set_size_histogram").items()) {
            report.set_size_histogram[std::stoul(key)] = value.get<std::size_t>();
        }
        for (const auto& row : j.at("rows")) {
            report.rows.push_back(QueryRow{row.at("query_id").get<std::string>(),
                                           row.at("max_iou").get<double>(),
                                           row.at("set_size").get<std::size_t>(),
                                           row.at("covered").get<bool>()});
        }
        return report;
    } catch (const std::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

void save_report_csv(const EvaluationReport& report, const std::filesystem::path& path) {
    std::string out = "query_id,max_iou,set_size,covered\n";
    for (const QueryRow& row : report.rows) {
        out += row.id;
        out += ',';
        out += format_double(row.max_iou);
        out += ',';
        out += std::to_string(row.set_size);
        out += ',';
        out += row.covered ? '1' : '0';
        out += '\n';
    }
    atomic_write_text(path, out);
}

void atomic_write_text(const std::filesystem::path& path, const std::string& text) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot write " + tmp.string());
        }
        out << text;
        if (!out.flush()) {
            throw IoError("write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " +
                      ec.message());
    }
}

} // namespace confseg
