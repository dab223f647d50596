#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "ssp/losses.hpp"
#include "ssp/metrics.hpp"
#include "ssp/model.hpp"
#include "ssp/scene.hpp"
#include "ssp/vta.hpp"

namespace ssp::train {

struct TrainConfig {
    std::uint64_t seed = 0;
    std::size_t epochs = 30;
    double lr = 1e-3;
    std::size_t lr_decay_epoch = 15;  // 1-based; 0 disables the decay
    double lr_decay_factor = 0.1;
    std::size_t batch_size = 2;
    LossWeights weights;
    bool use_premask = true;
    bool use_postmask = true;
    bool use_prompts = true;
    bool use_vta = true;
    std::size_t train_scenes = 16;
    std::size_t eval_scenes = 8;
    scene::SceneConfig train_scene;
    scene::SceneConfig eval_scene;
    double tau = kDefaultTau;
    double beta2 = metrics::kDefaultBeta2;
    model::ModelConfig model;
    vta::VtaConfig vta;

    /// Throws ValueError on an inconsistent or out-of-range setting.
    void validate() const;

    /// Rate in effect during 1-based epoch `epoch`.
    double lr_at(std::size_t epoch) const;

    model::PromptMode prompt_mode() const;

    /// Every setting as canonical key/value text, in a fixed order.
    std::vector<std::pair<std::string, std::string>> echo() const;
};

/// Applies one `key = value` setting. Throws ValueError for unknown keys or bad values.
void apply_setting(TrainConfig& config, const std::string& key, const std::string& value);

/// Reads `key = value` lines; `#` starts a comment, blank lines are ignored.
TrainConfig parse_config(std::istream& in, TrainConfig base = {});
TrainConfig load_config(const std::string& path, TrainConfig base = {});

struct EpochRecord {
    std::size_t epoch = 0;
    double lr = 0.0;
    // scene means of each recorded term; `post` is the weighted post-mask term
    double total = 0.0;
    double avs = 0.0;
    double mask = 0.0;
    double dice = 0.0;
    double bce = 0.0;
    double post = 0.0;
};

struct EvalSummary {
    double miou = 0.0;
    double f_score = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double miou_post = 0.0;  // predictions scored against the flow/ground-truth intersection
    std::size_t frames = 0;
    std::size_t gt_leaks = 0;
};

struct TrainReport {
    TrainConfig config;
    std::vector<EpochRecord> epochs;
    EvalSummary eval;
};

/// One training example with everything derived from it ahead of time.
struct PreparedScene {
    const scene::SceneSequence* scene = nullptr;
    std::vector<BinaryMask> flow_masks;
    std::vector<ImageFrame> inputs;  // pre-masked frames (train-time rule) or raw frames
    ad::Tensor target;               // (T, H, W, N), slot n holds class n's sounding pixels
    ad::Tensor post_target;          // target AND flow mask
    ad::Tensor class_labels;         // (N, K)
};

PreparedScene prepare_training_scene(const scene::SceneSequence& scene, const TrainConfig& config);

struct LossTerms {
    ad::Tensor total, avs, mask, dice, bce, post;
};

/// Forward pass plus the complete objective for one prepared scene.
LossTerms scene_loss(const PreparedScene& prepared, const model::ModelParams& params, const TrainConfig& config);

/// Test-time prediction: pre-masking (when on) uses the flow mask alone. Runs under an
/// InferenceGuard, so any ground-truth read is recorded as a leak.
std::vector<BinaryMask> infer(const scene::SceneSequence& scene, const model::ModelParams& params,
                              const TrainConfig& config);

EvalSummary evaluate(const std::vector<scene::SceneSequence>& scenes, const model::ModelParams& params,
                     const TrainConfig& config);

model::ModelParams init_params(const TrainConfig& config);

/// Trains from config.seed and evaluates on held-out scenes. Throws DivergenceError on a
/// non-finite loss. The trained parameters are copied to `trained` when given.
TrainReport train(const TrainConfig& config, model::ModelParams* trained = nullptr);

struct Variant {
    std::string name;
    bool use_premask = false;
    bool use_postmask = false;
    bool use_prompts = false;
    bool use_vta = false;

    void apply(TrainConfig& config) const;
};

/// premask, premask+postmask, prompts-no-vta, prompts-vta, no-postmask, no-premask, full.
std::vector<Variant> standard_variants();
/// Throws ValueError for an unknown name.
Variant variant_by_name(const std::string& name);

struct AblationRow {
    std::string name;
    bool use_premask = false, use_postmask = false, use_prompts = false, use_vta = false;
    std::vector<std::uint64_t> seeds;
    std::vector<double> miou, f_score;
    double median_miou = 0.0;
    double median_f_score = 0.0;
};

struct AblationReport {
    std::vector<AblationRow> rows;  // base first, then variants in order
    const AblationRow& row(const std::string& name) const;
};

double median(std::vector<double> values);

/// Trains the base config and every variant once per seed. Cells may run on `workers` threads;
/// rows are assembled in a fixed order regardless.
AblationReport ablate(const TrainConfig& base, const std::vector<Variant>& variants,
                      const std::vector<std::uint64_t>& seeds, std::size_t workers = 1);

/// Decimal text with 6 significant digits.
std::string format_number(double value);
/// The value after a round trip through format_number.
double round6(double value);

void write_jsonl(std::ostream& out, const TrainReport& report);
void write_table(std::ostream& out, const TrainReport& report);
void write_jsonl(std::ostream& out, const AblationReport& report);
void write_table(std::ostream& out, const AblationReport& report);

}  // namespace ssp::train
