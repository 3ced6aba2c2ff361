#pragma once

#include "confseg/calibration.hpp"
#include "confseg/conformal.hpp"
#include "confseg/crc.hpp"
#include "confseg/mask.hpp"
#include "confseg/model.hpp"
#include "confseg/report.hpp"
#include "confseg/synthetic.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace confseg {

/// One dataset row: a query with its truth mask and either the precomputed
/// prediction masks at every grid point (null = absent) or just the IoU score
/// row. Score-only rows support calibration and raw-threshold evaluation but
/// not prediction or duplicate removal.
struct ManifestRecord {
    std::string query_id;
    BinaryMask truth;
    std::vector<std::optional<BinaryMask>> predictions;
    std::vector<double> scores;

    bool has_masks() const { return !predictions.empty(); }
};

struct DatasetManifest {
    int schema_version = 1;
    std::string mode; // "synthetic" or "precomputed"
    ParameterGrid grid;
    std::vector<ManifestRecord> records;

    bool has_masks() const { return !records.empty() && records.front().has_masks(); }
    std::vector<std::string> ids() const;
    std::vector<BinaryMask> truths() const;
};

DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

/// Materializes a manifest from synthetic samples by sweeping the grid once.
DatasetManifest manifest_from_synthetic(const std::vector<QuerySample>& samples,
                                        const ParameterGrid& grid);

/// Lookup-backed model over a mask-carrying manifest.
class ManifestModel : public SegmentationModel {
public:
    explicit ManifestModel(std::shared_ptr<const DatasetManifest> manifest);

    std::size_t query_count() const override { return manifest_->records.size(); }
    const ParameterGrid& grid() const override { return manifest_->grid; }
    std::optional<BinaryMask> predict(std::size_t query, std::size_t param) const override;

private:
    std::shared_ptr<const DatasetManifest> manifest_;
};

/// IoU matrix straight from a score-only (or mixed) manifest's score rows.
IoUMatrix matrix_from_scores(const DatasetManifest& manifest);

// Selector files carry a "kind" discriminator; loading returns whichever
// variant the file holds. Round-tripping a selector reproduces identical
// predictions bit for bit.
using AnySelector = std::variant<CalibratedSelector, CrcSelector>;

void save_selector(const CalibratedSelector& sel, const std::filesystem::path& path);
void save_selector(const CrcSelector& sel, const std::filesystem::path& path);
AnySelector load_selector(const std::filesystem::path& path);

// IoU matrix cache: CSV with a header row of grid points and one row per
// calibration id; values are printed with round-trip precision so a reload
// is bit-exact.
void save_matrix_csv(const IoUMatrix& matrix, const ParameterGrid& grid,
                     std::span<const std::string> ids, const std::filesystem::path& path);
IoUMatrix load_matrix_csv(const std::filesystem::path& path, const ParameterGrid& expected_grid,
                          std::span<const std::string> expected_ids);

void save_report_json(const EvaluationReport& report, const std::filesystem::path& path);
EvaluationReport load_report_json(const std::filesystem::path& path);
void save_report_csv(const EvaluationReport& report, const std::filesystem::path& path);

/// All writers funnel through this: write to a sibling temp file, then rename.
void atomic_write_text(const std::filesystem::path& path, const std::string& text);

} // namespace confseg
