#include "ssp/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <string>

#include "json.hpp"

#include "ssp/error.hpp"
#include "ssp/netpbm.hpp"

namespace ssp::metrics {

namespace {

void check_pair(const BinaryMask& pred, const BinaryMask& gt) {
    if (pred.height() != gt.height() || pred.width() != gt.width()) {
        throw ShapeError("metrics: prediction " + std::to_string(pred.height()) + "x" + std::to_string(pred.width()) +
                         " vs ground truth " + std::to_string(gt.height()) + "x" + std::to_string(gt.width()));
    }
}

template <typename T>
void check_lists(std::span<const T> preds, std::span<const T> gts) {
    if (preds.size() != gts.size()) {
        throw ShapeError("metrics: " + std::to_string(preds.size()) + " predictions vs " + std::to_string(gts.size()) +
                         " ground-truth frames");
    }
}

void check_grid(const LabelGrid& g, std::size_t num_classes) {
    if (g.ids.size() != g.height * g.width) throw ShapeError("metrics: label grid size mismatch");
    for (auto id : g.ids) {
        if (id >= num_classes) {
            throw ValueError("metrics: class id " + std::to_string(id) + " >= " + std::to_string(num_classes));
        }
    }
}

}  // namespace

Counts count(const BinaryMask& pred, const BinaryMask& gt) {
    check_pair(pred, gt);
    Counts c;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred[i], g = gt[i];
        if (p && g)
            ++c.tp;
        else if (p)
            ++c.fp;
        else if (g)
            ++c.fn;
        else
            ++c.tn;
    }
    return c;
}

double frame_iou(const BinaryMask& pred, const BinaryMask& gt) {
    const Counts c = count(pred, gt);
    const std::size_t uni = c.tp + c.fp + c.fn;
    return uni == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(uni);
}

double miou(std::span<const BinaryMask> preds, std::span<const BinaryMask> gts) {
    check_lists(preds, gts);
    if (preds.empty()) throw EmptyInputError("miou: no frames");
    double acc = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) acc += frame_iou(preds[i], gts[i]);
    return acc / static_cast<double>(preds.size());
}

std::map<std::size_t, double> per_class_iou(std::span<const LabelGrid> preds, std::span<const LabelGrid> gts,
                                            std::size_t num_classes) {
    check_lists(preds, gts);
    std::vector<std::size_t> inter(num_classes, 0), uni(num_classes, 0);
    std::set<std::size_t> present;
    for (std::size_t f = 0; f < preds.size(); ++f) {
        const LabelGrid& p = preds[f];
        const LabelGrid& g = gts[f];
        check_grid(p, num_classes);
        check_grid(g, num_classes);
        if (p.height != g.height || p.width != g.width) throw ShapeError("miou_semantic: frame size mismatch");
        for (std::size_t i = 0; i < p.ids.size(); ++i) {
            present.insert(g.ids[i]);
            if (p.ids[i] == g.ids[i]) {
                ++inter[p.ids[i]];
                ++uni[p.ids[i]];
            } else {
                ++uni[p.ids[i]];
                ++uni[g.ids[i]];
            }
        }
    }
    std::map<std::size_t, double> out;
    for (auto k : present) out[k] = static_cast<double>(inter[k]) / static_cast<double>(uni[k]);
    return out;
}

double miou_semantic(std::span<const LabelGrid> preds, std::span<const LabelGrid> gts, std::size_t num_classes) {
    const auto per_class = per_class_iou(preds, gts, num_classes);
    if (per_class.empty()) throw EmptyInputError("miou_semantic: no pixels");
    double acc = 0.0;
    for (const auto& [k, v] : per_class) acc += v;
    return acc / static_cast<double>(per_class.size());
}

double precision(const Counts& c) {
    const std::size_t d = c.tp + c.fp;
    return d == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(d);
}

double recall(const Counts& c) {
    const std::size_t d = c.tp + c.fn;
    return d == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(d);
}

double f_measure(double p, double r, double beta2) {
    if (!(beta2 >= 0.0)) throw ValueError("fscore: beta2 must be >= 0");
    const double denom = beta2 * p + r;
    return denom == 0.0 ? 0.0 : (1.0 + beta2) * p * r / denom;
}

double fscore(std::span<const BinaryMask> preds, std::span<const BinaryMask> gts, double beta2, Averaging averaging) {
    return evaluate(preds, gts, beta2, averaging).f_score;
}

EvalReport evaluate(std::span<const BinaryMask> preds, std::span<const BinaryMask> gts, double beta2,
                    Averaging averaging) {
    check_lists(preds, gts);
    if (preds.empty()) throw EmptyInputError("evaluate: no frames");
    if (!(beta2 >= 0.0)) throw ValueError("evaluate: beta2 must be >= 0");
    EvalReport r;
    r.beta2 = beta2;
    r.averaging = averaging;
    double macro_f = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const Counts c = count(preds[i], gts[i]);
        r.counts += c;
        const std::size_t uni = c.tp + c.fp + c.fn;
        r.frame_iou.push_back(uni == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(uni));
        if (uni == 0) ++r.empty_frames;
        macro_f += f_measure(precision(c), recall(c), beta2);
    }
    double acc = 0.0;
    for (double v : r.frame_iou) acc += v;
    r.miou = acc / static_cast<double>(preds.size());
    r.precision = precision(r.counts);
    r.recall = recall(r.counts);
    r.f_score = averaging == Averaging::Micro ? f_measure(r.precision, r.recall, beta2)
                                              : macro_f / static_cast<double>(preds.size());
    return r;
}

LabelGrid to_labels(const BinaryMask& mask, std::size_t class_id) {
    LabelGrid g{mask.height(), mask.width(), std::vector<std::size_t>(mask.size(), 0)};
    for (std::size_t i = 0; i < mask.size(); ++i) g.ids[i] = mask[i] ? class_id : 0;
    return g;
}

std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("manifest: cannot open '" + path.string() + "'");
    const std::filesystem::path base = path.parent_path();
    auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp : base / fp;
    };
    std::vector<ManifestRecord> records;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        const auto first = text.find_first_not_of(" \t\r");
        if (first == std::string::npos || text[first] == '#') continue;
        const std::string where = "manifest line " + std::to_string(line);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw FormatError(where + ": " + e.what());
        }
        if (!j.is_object()) throw FormatError(where + ": expected a JSON object");
        ManifestRecord r;
        r.line = line;
        auto path_field = [&](const char* key, bool required) -> std::filesystem::path {
            if (!j.contains(key)) {
                if (required) throw FormatError(where + ": missing field '" + key + "'");
                return {};
            }
            if (!j[key].is_string()) throw FormatError(where + ": field '" + key + "' must be a string");
            const auto p = resolve(j[key].get<std::string>());
            if (!std::filesystem::exists(p)) throw IoError(where + ": file '" + p.string() + "' does not exist");
            return p;
        };
        r.frame = path_field("frame", false);
        r.flow = path_field("flow", false);
        r.gt = path_field("gt", true);
        r.pred = path_field("pred", true);
        if (j.contains("class")) {
            if (!j["class"].is_number_integer() || j["class"].get<long long>() < 0) {
                throw FormatError(where + ": field 'class' must be a nonnegative integer");
            }
            r.class_id = j["class"].get<std::size_t>();
        }
        for (auto [key, dst] : {std::pair{"prompt1", &r.prompt1}, std::pair{"prompt2", &r.prompt2}}) {
            if (!j.contains(key)) continue;
            if (!j[key].is_string()) throw FormatError(where + ": field '" + key + "' must be a string");
            *dst = j[key].get<std::string>();
        }
        records.push_back(std::move(r));
    }
    return records;
}

EvalReport evaluate_manifest(const std::filesystem::path& path, double beta2, Averaging averaging) {
    const auto records = read_manifest(path);
    if (records.empty()) throw EmptyInputError("manifest '" + path.string() + "' has no records");
    std::vector<BinaryMask> preds, gts;
    bool semantic = true;
    std::size_t max_class = 0;
    for (const auto& r : records) {
        const std::string where = "manifest line " + std::to_string(r.line);
        try {
            gts.push_back(netpbm::read_binary_mask(r.gt));
            preds.push_back(netpbm::read_binary_mask(r.pred));
        } catch (const FormatError& e) {
            throw FormatError(where + ": " + e.what());
        } catch (const IoError& e) {
            throw IoError(where + ": " + e.what());
        }
        if (preds.back().height() != gts.back().height() || preds.back().width() != gts.back().width()) {
            throw ShapeError(where + ": prediction and ground truth differ in size");
        }
        semantic = semantic && r.class_id.has_value();
        if (r.class_id) max_class = std::max(max_class, *r.class_id);
    }
    EvalReport report = evaluate(preds, gts, beta2, averaging);
    if (semantic) {
        std::vector<LabelGrid> pl, gl;
        for (std::size_t i = 0; i < records.size(); ++i) {
            pl.push_back(to_labels(preds[i], *records[i].class_id));
            gl.push_back(to_labels(gts[i], *records[i].class_id));
        }
        const std::size_t k = std::max<std::size_t>(max_class + 1, 2);
        report.class_iou = per_class_iou(pl, gl, k);
        report.miou_semantic = miou_semantic(pl, gl, k);
    }
    return report;
}

}  // namespace ssp::metrics
