#include "ssp/train.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "ssp/error.hpp"
#include "ssp/flow.hpp"
#include "ssp/random.hpp"

namespace ssp::train {

using ad::Tensor;
using Json = nlohmann::ordered_json;

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "off" || v == "no") return false;
    throw ValueError("config: '" + key + "' expects a boolean, got '" + v + "'");
}

double parse_double(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double d = 0.0;
    try {
        d = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != v.size() || !std::isfinite(d)) {
        throw ValueError("config: '" + key + "' expects a number, got '" + v + "'");
    }
    return d;
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    unsigned long long u = 0;
    try {
        if (!v.empty() && v[0] != '-') u = std::stoull(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != v.size()) {
        throw ValueError("config: '" + key + "' expects a nonnegative integer, got '" + v + "'");
    }
    return u;
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

using Setter = std::function<void(TrainConfig&, const std::string&, const std::string&)>;
using Getter = std::function<std::string(const TrainConfig&)>;

struct Field {
    std::string key;
    Setter set;
    Getter get;
};

template <typename T>
Field size_field(std::string key, T TrainConfig::*member) {
    return {key, [member](TrainConfig& c, const std::string& k, const std::string& v) {
                c.*member = static_cast<T>(parse_uint(k, v));
            },
            [member](const TrainConfig& c) { return std::to_string(c.*member); }};
}

Field double_field(std::string key, double TrainConfig::*member) {
    return {key, [member](TrainConfig& c, const std::string& k, const std::string& v) { c.*member = parse_double(k, v); },
            [member](const TrainConfig& c) { return format_number(c.*member); }};
}

Field bool_field(std::string key, bool TrainConfig::*member) {
    return {key, [member](TrainConfig& c, const std::string& k, const std::string& v) { c.*member = parse_bool(k, v); },
            [member](const TrainConfig& c) { return bool_text(c.*member); }};
}

Field weight_field(std::string key, double LossWeights::*member) {
    return {key,
            [member](TrainConfig& c, const std::string& k, const std::string& v) { c.weights.*member = parse_double(k, v); },
            [member](const TrainConfig& c) { return format_number(c.weights.*member); }};
}

// scene.<name> sets both scene configs and echoes the training one; eval.<name> sets and
// echoes the evaluation one.
template <typename T>
void scene_fields(std::vector<Field>& out, std::string name, T scene::SceneConfig::*member) {
    auto parse = [](const std::string& k, const std::string& v) -> T {
        if constexpr (std::is_same_v<T, bool>) {
            return parse_bool(k, v);
        } else if constexpr (std::is_same_v<T, double>) {
            return parse_double(k, v);
        } else {
            return static_cast<T>(parse_uint(k, v));
        }
    };
    auto text = [](T v) -> std::string {
        if constexpr (std::is_same_v<T, bool>) {
            return bool_text(v);
        } else if constexpr (std::is_same_v<T, double>) {
            return format_number(v);
        } else {
            return std::to_string(v);
        }
    };
    out.push_back({"scene." + name,
                   [member, parse](TrainConfig& c, const std::string& k, const std::string& v) {
                       c.train_scene.*member = parse(k, v);
                       c.eval_scene.*member = parse(k, v);
                   },
                   [member, text](const TrainConfig& c) { return text(c.train_scene.*member); }});
    out.push_back({"eval." + name,
                   [member, parse](TrainConfig& c, const std::string& k, const std::string& v) {
                       c.eval_scene.*member = parse(k, v);
                   },
                   [member, text](const TrainConfig& c) { return text(c.eval_scene.*member); }});
}

template <typename T>
Field vta_field(std::string key, T vta::VtaConfig::*member) {
    return {key,
            [member](TrainConfig& c, const std::string& k, const std::string& v) {
                if constexpr (std::is_same_v<T, bool>) {
                    c.vta.*member = parse_bool(k, v);
                } else {
                    c.vta.*member = static_cast<T>(parse_uint(k, v));
                }
            },
            [member](const TrainConfig& c) {
                if constexpr (std::is_same_v<T, bool>) {
                    return bool_text(c.vta.*member);
                } else {
                    return std::to_string(c.vta.*member);
                }
            }};
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = [] {
        std::vector<Field> f;
        f.push_back({"seed", [](TrainConfig& c, const std::string& k, const std::string& v) { c.seed = parse_uint(k, v); },
                     [](const TrainConfig& c) { return std::to_string(c.seed); }});
        f.push_back(size_field("epochs", &TrainConfig::epochs));
        f.push_back(double_field("lr", &TrainConfig::lr));
        f.push_back(size_field("lr_decay_epoch", &TrainConfig::lr_decay_epoch));
        f.push_back(double_field("lr_decay_factor", &TrainConfig::lr_decay_factor));
        f.push_back(size_field("batch_size", &TrainConfig::batch_size));
        f.push_back(weight_field("lambda_mask", &LossWeights::lambda_mask));
        f.push_back(weight_field("lambda_dice", &LossWeights::lambda_dice));
        f.push_back(weight_field("lambda_bce", &LossWeights::lambda_bce));
        f.push_back(weight_field("lambda_mask_prime", &LossWeights::lambda_mask_prime));
        f.push_back(bool_field("use_premask", &TrainConfig::use_premask));
        f.push_back(bool_field("use_postmask", &TrainConfig::use_postmask));
        f.push_back(bool_field("use_prompts", &TrainConfig::use_prompts));
        f.push_back(bool_field("use_vta", &TrainConfig::use_vta));
        f.push_back(size_field("train_scenes", &TrainConfig::train_scenes));
        f.push_back(size_field("eval_scenes", &TrainConfig::eval_scenes));
        f.push_back(double_field("tau", &TrainConfig::tau));
        f.push_back(double_field("beta2", &TrainConfig::beta2));
        scene_fields(f, "grid", &scene::SceneConfig::grid);
        scene_fields(f, "frames", &scene::SceneConfig::frames);
        scene_fields(f, "object_size", &scene::SceneConfig::object_size);
        scene_fields(f, "speed", &scene::SceneConfig::speed);
        scene_fields(f, "audio_dim", &scene::SceneConfig::audio_dim);
        scene_fields(f, "moving_sounder", &scene::SceneConfig::moving_sounder);
        scene_fields(f, "stationary_prob", &scene::SceneConfig::stationary_prob);
        scene_fields(f, "distractor_prob", &scene::SceneConfig::distractor_prob);
        scene_fields(f, "decoy_prob", &scene::SceneConfig::decoy_prob);
        scene_fields(f, "audio_noise", &scene::SceneConfig::audio_noise);
        scene_fields(f, "pixel_noise", &scene::SceneConfig::pixel_noise);
        f.push_back({"model.channels",
                     [](TrainConfig& c, const std::string& k, const std::string& v) {
                         c.model.channels = parse_uint(k, v);
                         c.vta.out_dim = c.model.channels;
                     },
                     [](const TrainConfig& c) { return std::to_string(c.model.channels); }});
        f.push_back(vta_field("vta.d_model", &vta::VtaConfig::d_model));
        f.push_back(vta_field("vta.heads", &vta::VtaConfig::heads));
        f.push_back(vta_field("vta.layers", &vta::VtaConfig::layers));
        f.push_back(vta_field("vta.max_len", &vta::VtaConfig::max_len));
        f.push_back(vta_field("vta.vocab", &vta::VtaConfig::vocab));
        f.push_back(vta_field("vta.ffn_width", &vta::VtaConfig::ffn_width));
        f.push_back(vta_field("vta.patch", &vta::VtaConfig::patch));
        f.push_back(vta_field("vta.separate_refine_weights", &vta::VtaConfig::separate_refine_weights));
        f.push_back({"vta.normalization",
                     [](TrainConfig& c, const std::string& k, const std::string& v) {
                         if (v == "layer") {
                             c.vta.normalization = vta::Normalization::LayerNorm;
                         } else if (v == "l2") {
                             c.vta.normalization = vta::Normalization::L2;
                         } else {
                             throw ValueError("config: '" + k + "' expects 'layer' or 'l2', got '" + v + "'");
                         }
                     },
                     [](const TrainConfig& c) {
                         return std::string(c.vta.normalization == vta::Normalization::L2 ? "l2" : "layer");
                     }});
        return f;
    }();
    return table;
}

Tensor slot_target(const scene::SceneSequence& sc, std::size_t slots, const std::vector<BinaryMask>* gate) {
    const std::size_t T = sc.frames.size(), H = sc.frames[0].height(), W = sc.frames[0].width();
    std::vector<double> v(T * H * W * slots, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        const auto& lab = sc.gt.labels(t);
        for (std::size_t i = 0; i < H * W; ++i) {
            const std::size_t id = lab.ids[i];
            if (id == 0 || id > slots) continue;
            if (gate != nullptr && !(*gate)[t][i]) continue;
            v[(t * H * W + i) * slots + (id - 1)] = 1.0;
        }
    }
    return Tensor::constant({T, H, W, slots}, std::move(v));
}

void check_finite(const LossTerms& terms, std::size_t epoch, std::size_t index) {
    if (!std::isfinite(terms.total.item())) {
        throw DivergenceError("train: non-finite loss at epoch " + std::to_string(epoch) + ", scene " +
                              std::to_string(index) + " (avs " + format_number(terms.avs.item()) + ", post " +
                              format_number(terms.post.item()) + ")");
    }
}

}  // namespace

void TrainConfig::validate() const {
    if (epochs == 0) throw ValueError("config: epochs must be >= 1");
    if (!(lr > 0.0)) throw ValueError("config: lr must be > 0");
    if (!(lr_decay_factor > 0.0)) throw ValueError("config: lr_decay_factor must be > 0");
    if (batch_size == 0) throw ValueError("config: batch_size must be >= 1");
    if (train_scenes == 0 || eval_scenes == 0) throw ValueError("config: scene counts must be >= 1");
    if (!(tau >= 0.0 && tau <= 1.0)) throw ValueError("config: tau must lie in [0,1]");
    if (!(beta2 >= 0.0)) throw ValueError("config: beta2 must be >= 0");
    if (use_vta && !use_prompts) throw ValueError("config: use_vta requires use_prompts");
    weights.validate();
    train_scene.validate();
    eval_scene.validate();
    if (train_scene.grid != eval_scene.grid || train_scene.frames != eval_scene.frames ||
        train_scene.audio_dim != eval_scene.audio_dim) {
        throw ValueError("config: training and evaluation scenes must share grid, frames and audio_dim");
    }
    model.validate();
    if (model.classes != scene::kNumClasses) throw ValueError("config: the scene set has four classes");
    if (use_prompts) {
        vta.validate();
        if (train_scene.grid % vta.patch != 0) throw ValueError("config: grid must be a multiple of vta.patch");
        if (vta.out_dim != model.channels) throw ValueError("config: vta output width must equal model.channels");
    }
}

double TrainConfig::lr_at(std::size_t epoch) const {
    return lr_decay_epoch != 0 && epoch >= lr_decay_epoch ? lr * lr_decay_factor : lr;
}

model::PromptMode TrainConfig::prompt_mode() const {
    if (!use_prompts) return model::PromptMode::None;
    return use_vta ? model::PromptMode::Vta : model::PromptMode::AttendOnce;
}

std::vector<std::pair<std::string, std::string>> TrainConfig::echo() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& f : fields()) out.emplace_back(f.key, f.get(*this));
    return out;
}

void apply_setting(TrainConfig& config, const std::string& key, const std::string& value) {
    for (const auto& f : fields()) {
        if (f.key == key) {
            f.set(config, key, value);
            return;
        }
    }
    throw ValueError("config: unknown key '" + key + "'");
}

TrainConfig parse_config(std::istream& in, TrainConfig base) {
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValueError("config line " + std::to_string(number) + ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        try {
            apply_setting(base, key, value);
        } catch (const ValueError& e) {
            throw ValueError("config line " + std::to_string(number) + ": " + e.what());
        }
    }
    return base;
}

TrainConfig load_config(const std::string& path, TrainConfig base) {
    std::ifstream in(path);
    if (!in) throw IoError("config: cannot open '" + path + "'");
    return parse_config(in, std::move(base));
}

PreparedScene prepare_training_scene(const scene::SceneSequence& sc, const TrainConfig& config) {
    PreparedScene p;
    p.scene = &sc;
    p.flow_masks = flow_masks(sc.frames, config.tau);
    const std::size_t T = sc.frames.size();
    for (std::size_t t = 0; t < T; ++t) {
        p.inputs.push_back(config.use_premask ? apply_premask(sc.frames[t], premask(p.flow_masks[t], sc.gt.mask(t)))
                                              : sc.frames[t]);
    }
    const std::size_t n = config.model.queries, k = config.model.classes;
    p.target = slot_target(sc, n, nullptr);
    p.post_target = slot_target(sc, n, &p.flow_masks);
    std::vector<double> labels(n * k, 0.0);
    for (auto c : sc.sounding_classes()) {
        if (c < n && c < k) labels[c * k + c] = 1.0;
    }
    p.class_labels = Tensor::constant({n, k}, std::move(labels));
    return p;
}

LossTerms scene_loss(const PreparedScene& prepared, const model::ModelParams& params, const TrainConfig& config) {
    const auto& sc = *prepared.scene;
    model::ForwardInput in{prepared.inputs, sc.frames, &sc.audio, &sc.prompt1, &sc.prompt2};
    const auto out = model::forward(in, params, config.prompt_mode());
    LossTerms terms;
    terms.mask = bce_mask_loss(out.probs, prepared.target);
    terms.dice = dice_loss(out.probs, prepared.target);
    terms.bce = class_bce_loss(out.decoder.class_logits, prepared.class_labels);
    terms.avs = avs_loss(terms.mask, terms.dice, terms.bce, config.weights);
    LossWeights w = config.weights;
    if (config.use_postmask) {
        terms.post = post_mask_loss(out.probs, prepared.post_target);
    } else {
        w.lambda_mask_prime = 0.0;
        terms.post = Tensor::scalar(0.0);
    }
    terms.total = total_loss(terms.avs, terms.post, w);
    terms.post = ad::scale(terms.post, w.lambda_mask_prime);
    return terms;
}

std::vector<BinaryMask> infer(const scene::SceneSequence& sc, const model::ModelParams& params,
                              const TrainConfig& config) {
    scene::InferenceGuard guard;
    const auto m_o = flow_masks(sc.frames, config.tau);
    std::vector<ImageFrame> inputs;
    for (std::size_t t = 0; t < sc.frames.size(); ++t) {
        inputs.push_back(config.use_premask ? apply_premask(sc.frames[t], inference_premask(m_o[t])) : sc.frames[t]);
    }
    model::ForwardInput in{inputs, sc.frames, &sc.audio, &sc.prompt1, &sc.prompt2};
    return model::predict_masks(model::forward(in, params, config.prompt_mode()).probs);
}

EvalSummary evaluate(const std::vector<scene::SceneSequence>& scenes, const model::ModelParams& params,
                     const TrainConfig& config) {
    std::vector<BinaryMask> preds, gts, posts;
    EvalSummary s;
    for (const auto& sc : scenes) {
        const std::size_t leaks_before = sc.gt.leaks();
        auto p = infer(sc, params, config);
        s.gt_leaks += sc.gt.leaks() - leaks_before;
        const auto m_o = flow_masks(sc.frames, config.tau);
        for (std::size_t t = 0; t < p.size(); ++t) {
            gts.push_back(sc.gt.mask(t));
            posts.push_back(postmask_label(m_o[t], gts.back()));
            preds.push_back(std::move(p[t]));
        }
    }
    const auto report = metrics::evaluate(preds, gts, config.beta2);
    s.miou = report.miou;
    s.f_score = report.f_score;
    s.precision = report.precision;
    s.recall = report.recall;
    s.miou_post = metrics::miou(preds, posts);
    s.frames = preds.size();
    return s;
}

model::ModelParams init_params(const TrainConfig& config) {
    Rng rng(derive_seed(config.seed, 3));
    model::ModelConfig mc = config.model;
    mc.audio_dim = config.train_scene.audio_dim;
    std::optional<vta::VtaConfig> vc;
    if (config.use_prompts) {
        vc = config.vta;
        vc->out_dim = mc.channels;
        vc->channels = mc.image_channels;
    }
    return model::ModelParams::init(mc, rng, vc);
}

TrainReport train(const TrainConfig& config, model::ModelParams* trained) {
    config.validate();
    const auto train_set = scene::gen_scenes(derive_seed(config.seed, 1), config.train_scenes, config.train_scene);
    const auto eval_set = scene::gen_scenes(derive_seed(config.seed, 2), config.eval_scenes, config.eval_scene);
    std::vector<PreparedScene> prepared;
    for (const auto& sc : train_set) prepared.push_back(prepare_training_scene(sc, config));

    model::ModelParams params = init_params(config);
    auto tensors = params.parameters();
    Rng order_rng(derive_seed(config.seed, 4));

    TrainReport report;
    report.config = config;
    std::vector<std::size_t> order(prepared.size());
    for (std::size_t e = 1; e <= config.epochs; ++e) {
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), std::mt19937_64(order_rng.next()));
        EpochRecord rec;
        rec.epoch = e;
        rec.lr = config.lr_at(e);
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t stop = std::min(order.size(), start + config.batch_size);
            const double inv = 1.0 / static_cast<double>(stop - start);
            for (std::size_t i = start; i < stop; ++i) {
                const LossTerms terms = scene_loss(prepared[order[i]], params, config);
                check_finite(terms, e, order[i]);
                rec.total += terms.total.item();
                rec.avs += terms.avs.item();
                rec.mask += terms.mask.item();
                rec.dice += terms.dice.item();
                rec.bce += terms.bce.item();
                rec.post += terms.post.item();
                ad::backward(ad::scale(terms.total, inv));
            }
            for (auto& p : tensors) {
                const auto g = p.grad();
                auto v = p.mutable_data();
                for (std::size_t j = 0; j < v.size(); ++j) v[j] -= rec.lr * g[j];
                p.zero_grad();
            }
        }
        const double n = static_cast<double>(prepared.size());
        for (double* v : {&rec.total, &rec.avs, &rec.mask, &rec.dice, &rec.bce, &rec.post}) *v /= n;
        report.epochs.push_back(rec);
    }
    report.eval = evaluate(eval_set, params, config);
    if (trained != nullptr) *trained = params;
    return report;
}

void Variant::apply(TrainConfig& config) const {
    config.use_premask = use_premask;
    config.use_postmask = use_postmask;
    config.use_prompts = use_prompts;
    config.use_vta = use_vta;
}

std::vector<Variant> standard_variants() {
    return {
        {"premask", true, false, false, false},       {"premask+postmask", true, true, false, false},
        {"prompts-no-vta", false, false, true, false}, {"prompts-vta", false, false, true, true},
        {"no-postmask", true, false, true, true},      {"no-premask", false, true, true, true},
        {"full", true, true, true, true},
    };
}

Variant variant_by_name(const std::string& name) {
    if (name == "baseline") return {"baseline", false, false, false, false};
    for (const auto& v : standard_variants()) {
        if (v.name == name) return v;
    }
    throw ValueError("ablate: unknown variant '" + name + "'");
}

const AblationRow& AblationReport::row(const std::string& name) const {
    for (const auto& r : rows) {
        if (r.name == name) return r;
    }
    throw ValueError("ablation report has no row '" + name + "'");
}

double median(std::vector<double> values) {
    if (values.empty()) throw EmptyInputError("median: no values");
    std::sort(values.begin(), values.end());
    const std::size_t m = values.size() / 2;
    return values.size() % 2 == 1 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

AblationReport ablate(const TrainConfig& base, const std::vector<Variant>& variants,
                      const std::vector<std::uint64_t>& seeds, std::size_t workers) {
    if (seeds.empty()) throw EmptyInputError("ablate: no seeds");
    std::vector<TrainConfig> row_configs{base};
    std::vector<std::string> names{"base"};
    for (const auto& v : variants) {
        TrainConfig c = base;
        v.apply(c);
        c.validate();
        row_configs.push_back(c);
        names.push_back(v.name);
    }
    base.validate();

    const std::size_t cells = row_configs.size() * seeds.size();
    std::vector<EvalSummary> results(cells);
    std::vector<std::exception_ptr> errors(cells);
    auto run_cell = [&](std::size_t i) {
        try {
            TrainConfig c = row_configs[i / seeds.size()];
            c.seed = seeds[i % seeds.size()];
            results[i] = train(c).eval;
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    workers = std::max<std::size_t>(1, std::min(workers, cells));
    if (workers == 1) {
        for (std::size_t i = 0; i < cells; ++i) run_cell(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < cells; i = next++) run_cell(i);
            });
        }
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    AblationReport report;
    for (std::size_t r = 0; r < row_configs.size(); ++r) {
        AblationRow row;
        row.name = names[r];
        row.use_premask = row_configs[r].use_premask;
        row.use_postmask = row_configs[r].use_postmask;
        row.use_prompts = row_configs[r].use_prompts;
        row.use_vta = row_configs[r].use_vta;
        row.seeds = seeds;
        for (std::size_t s = 0; s < seeds.size(); ++s) {
            row.miou.push_back(results[r * seeds.size() + s].miou);
            row.f_score.push_back(results[r * seeds.size() + s].f_score);
        }
        row.median_miou = median(row.miou);
        row.median_f_score = median(row.f_score);
        report.rows.push_back(std::move(row));
    }
    return report;
}

std::string format_number(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", value);
    return buf;
}

double round6(double value) { return std::strtod(format_number(value).c_str(), nullptr); }

void write_jsonl(std::ostream& out, const TrainReport& report) {
    Json cfg;
    cfg["record"] = "config";
    for (const auto& [k, v] : report.config.echo()) cfg[k] = v;
    out << cfg.dump() << '\n';
    for (const auto& e : report.epochs) {
        Json j;
        j["record"] = "epoch";
        j["epoch"] = e.epoch;
        j["lr"] = round6(e.lr);
        j["total"] = round6(e.total);
        j["avs"] = round6(e.avs);
        j["mask"] = round6(e.mask);
        j["dice"] = round6(e.dice);
        j["bce"] = round6(e.bce);
        j["post"] = round6(e.post);
        out << j.dump() << '\n';
    }
    Json ev;
    ev["record"] = "eval";
    ev["seed"] = report.config.seed;
    ev["frames"] = report.eval.frames;
    ev["miou"] = round6(report.eval.miou);
    ev["f_score"] = round6(report.eval.f_score);
    ev["precision"] = round6(report.eval.precision);
    ev["recall"] = round6(report.eval.recall);
    ev["beta2"] = round6(report.config.beta2);
    ev["miou_post"] = round6(report.eval.miou_post);
    ev["gt_leaks"] = report.eval.gt_leaks;
    out << ev.dump() << '\n';
}

void write_table(std::ostream& out, const TrainReport& report) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%5s %10s %10s %10s %10s %10s %10s %10s\n", "epoch", "lr", "total", "avs", "mask",
                  "dice", "bce", "post");
    out << buf;
    for (const auto& e : report.epochs) {
        std::snprintf(buf, sizeof buf, "%5zu %10.6g %10.6g %10.6g %10.6g %10.6g %10.6g %10.6g\n", e.epoch, e.lr, e.total,
                      e.avs, e.mask, e.dice, e.bce, e.post);
        out << buf;
    }
    const auto& ev = report.eval;
    std::snprintf(buf, sizeof buf, "eval frames=%zu miou=%.6g f_score=%.6g (beta2=%.6g) precision=%.6g recall=%.6g\n",
                  ev.frames, ev.miou, ev.f_score, report.config.beta2, ev.precision, ev.recall);
    out << buf;
    std::snprintf(buf, sizeof buf, "eval miou_post=%.6g gt_leaks=%zu\n", ev.miou_post, ev.gt_leaks);
    out << buf;
}

void write_jsonl(std::ostream& out, const AblationReport& report) {
    for (const auto& r : report.rows) {
        Json j;
        j["record"] = "variant";
        j["name"] = r.name;
        j["use_premask"] = r.use_premask;
        j["use_postmask"] = r.use_postmask;
        j["use_prompts"] = r.use_prompts;
        j["use_vta"] = r.use_vta;
        j["seeds"] = r.seeds;
        Json m = Json::array(), f = Json::array();
        for (double v : r.miou) m.push_back(round6(v));
        for (double v : r.f_score) f.push_back(round6(v));
        j["miou"] = m;
        j["f_score"] = f;
        j["median_miou"] = round6(r.median_miou);
        j["median_f_score"] = round6(r.median_f_score);
        out << j.dump() << '\n';
    }
}

void write_table(std::ostream& out, const AblationReport& report) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-18s %7s %7s %7s %7s %12s %12s\n", "variant", "premask", "postmsk", "prompts", "vta",
                  "median_miou", "median_f");
    out << buf;
    auto yn = [](bool b) { return b ? "yes" : "-"; };
    for (const auto& r : report.rows) {
        std::snprintf(buf, sizeof buf, "%-18s %7s %7s %7s %7s %12.6g %12.6g\n", r.name.c_str(), yn(r.use_premask),
                      yn(r.use_postmask), yn(r.use_prompts), yn(r.use_vta), r.median_miou, r.median_f_score);
        out << buf;
    }
}

}  // namespace ssp::train
