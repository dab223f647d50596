#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ssp/grid.hpp"

namespace ssp::metrics {

/// Default F-measure weight: beta^2 = 0.3, emphasizing precision.
inline constexpr double kDefaultBeta2 = 0.3;

/// Per-pixel class ids; 0 is background.
struct LabelGrid {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::size_t> ids;
};

/// Foreground pixel counts pooled over any number of frames.
struct Counts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;

    Counts& operator+=(const Counts& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        tn += o.tn;
        return *this;
    }
    bool operator==(const Counts&) const = default;
};

enum class Averaging { Micro, Macro };

Counts count(const BinaryMask& pred, const BinaryMask& gt);

/// |P ∩ G| / |P ∪ G|; 1 when both are empty.
double frame_iou(const BinaryMask& pred, const BinaryMask& gt);

/// Mean of per-frame foreground IoU.
double miou(std::span<const BinaryMask> preds, std::span<const BinaryMask> gts);

/// Per-class IoU over the union of all frames, averaged over classes that occur in `gts`
/// (background included). Throws ValueError for an id >= num_classes.
double miou_semantic(std::span<const LabelGrid> preds, std::span<const LabelGrid> gts, std::size_t num_classes);
std::map<std::size_t, double> per_class_iou(std::span<const LabelGrid> preds, std::span<const LabelGrid> gts,
                                            std::size_t num_classes);

double precision(const Counts& c);
double recall(const Counts& c);
/// ((1 + beta2) P R) / (beta2 P + R); 0 when the denominator is 0.
double f_measure(double precision, double recall, double beta2);

/// Micro: pooled pixels across frames. Macro: mean of per-frame F.
double fscore(std::span<const BinaryMask> preds, std::span<const BinaryMask> gts, double beta2 = kDefaultBeta2,
              Averaging averaging = Averaging::Micro);

struct EvalReport {
    std::vector<double> frame_iou;
    std::map<std::size_t, double> class_iou;  // filled in semantic mode only
    double miou = 0.0;
    double miou_semantic = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f_score = 0.0;
    double beta2 = kDefaultBeta2;
    Averaging averaging = Averaging::Micro;
    Counts counts;
    std::size_t empty_frames = 0;  // frames with neither predicted nor true foreground
};

EvalReport evaluate(std::span<const BinaryMask> preds, std::span<const BinaryMask> gts, double beta2 = kDefaultBeta2,
                    Averaging averaging = Averaging::Micro);

/// Binary masks with one class id per frame, lifted to label grids for semantic scoring.
LabelGrid to_labels(const BinaryMask& mask, std::size_t class_id);

/// One manifest line.
struct ManifestRecord {
    std::size_t line = 0;
    std::filesystem::path frame, flow, gt, pred;
    std::optional<std::size_t> class_id;
    std::string prompt1, prompt2;
};

/// Parses a manifest: one JSON object per line with string fields `gt` and `pred` (required),
/// `frame` and `flow` (optional paths), `class` (optional integer), `prompt1`/`prompt2`
/// (optional strings). Relative paths resolve against the manifest's directory. Blank lines and
/// lines starting with '#' are skipped.
std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path);

/// Loads every pred/gt pair and evaluates them in manifest order. When every record carries a
/// class id, semantic per-class IoU is reported as well.
EvalReport evaluate_manifest(const std::filesystem::path& path, double beta2 = kDefaultBeta2,
                             Averaging averaging = Averaging::Micro);

}  // namespace ssp::metrics
