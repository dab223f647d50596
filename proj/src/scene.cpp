#include "ssp/scene.hpp"

#include <algorithm>
#include <cmath>

#include "ssp/error.hpp"
#include "ssp/random.hpp"

namespace ssp::scene {

namespace {

constexpr std::array<std::array<double, 3>, kNumClasses> kClassColors = {{
    {0.9, 0.3, 0.2},
    {0.3, 0.8, 0.3},
    {0.3, 0.4, 0.95},
    {0.9, 0.85, 0.2},
}};

constexpr std::size_t kCell = 4;  // object positions snap to the 1/4-scale grid
constexpr std::size_t kTextureBlock = 4;
constexpr double kTextureMax = 0.15;

thread_local int guard_depth = 0;

std::size_t pick_cell(Rng& rng, std::size_t max_col) {
    return static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(max_col / kCell))) * kCell;
}

std::size_t pick_class(Rng& rng, const std::vector<std::size_t>& exclude) {
    std::vector<std::size_t> options;
    for (std::size_t k = 0; k < kNumClasses; ++k) {
        if (std::find(exclude.begin(), exclude.end(), k) == exclude.end()) options.push_back(k);
    }
    return options[static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(options.size()) - 1))];
}

}  // namespace

void SceneConfig::validate() const {
    if (frames < 2) throw ValueError("scene: frames must be >= 2");
    if (object_size == 0 || grid % object_size != 0) throw ValueError("scene: grid must be a multiple of object_size");
    if (grid / object_size < 4) throw ValueError("scene: grid must hold four object bands");
    if (grid % 32 != 0) throw ValueError("scene: grid must be a multiple of 32");
    if (object_size + speed * (frames - 1) > grid) throw ValueError("scene: moving objects leave the frame");
    if (audio_dim < kNumClasses) throw ValueError("scene: audio_dim must be >= the number of classes");
    for (double p : {stationary_prob, distractor_prob, decoy_prob}) {
        if (!(p >= 0.0 && p <= 1.0)) throw ValueError("scene: probabilities must lie in [0,1]");
    }
    if (!moving_sounder && stationary_prob <= 0.0) throw ValueError("scene: no sounding object can appear");
    if (!(audio_noise >= 0.0) || !(pixel_noise >= 0.0)) throw ValueError("scene: noise levels must be >= 0");
}

const char* role_name(Role role) {
    switch (role) {
        case Role::MovingSounder: return "moving-sounder";
        case Role::Distractor: return "distractor";
        case Role::StationarySounder: return "stationary-sounder";
        case Role::Decoy: return "decoy";
    }
    return "?";
}

GroundTruthStore::GroundTruthStore(std::vector<BinaryMask> masks, std::vector<metrics::LabelGrid> labels)
    : masks_(std::move(masks)), labels_(std::move(labels)) {
    if (masks_.size() != labels_.size()) throw ShapeError("GroundTruthStore: masks and labels differ in length");
}

void GroundTruthStore::touch() const {
    ++counters_->total;
    if (InferenceGuard::active()) ++counters_->leaks;
}

const BinaryMask& GroundTruthStore::mask(std::size_t t) const {
    touch();
    return masks_.at(t);
}

const metrics::LabelGrid& GroundTruthStore::labels(std::size_t t) const {
    touch();
    return labels_.at(t);
}

InferenceGuard::InferenceGuard() { ++guard_depth; }
InferenceGuard::~InferenceGuard() { --guard_depth; }
bool InferenceGuard::active() { return guard_depth > 0; }

std::vector<std::size_t> SceneSequence::sounding_classes() const {
    std::vector<std::size_t> out;
    for (const auto& o : objects) {
        if (o.sounding()) out.push_back(o.class_id);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<double> class_audio(std::size_t class_id, std::size_t dim) {
    if (class_id >= dim) throw ValueError("class_audio: need audio_dim > class id for orthogonal class vectors");
    // Seeded Gaussian vectors for classes 0..class_id, Gram-Schmidt orthonormalized in order.
    std::vector<std::vector<double>> basis;
    for (std::size_t k = 0; k <= class_id; ++k) {
        Rng rng(derive_seed(0xa0d10, k));
        std::vector<double> v(dim);
        for (auto& x : v) x = rng.normal();
        for (const auto& b : basis) {
            double dot = 0.0;
            for (std::size_t i = 0; i < dim; ++i) dot += v[i] * b[i];
            for (std::size_t i = 0; i < dim; ++i) v[i] -= dot * b[i];
        }
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        for (auto& x : v) x /= norm;
        basis.push_back(std::move(v));
    }
    return basis.back();
}

SceneSequence gen_scene(std::uint64_t seed, const SceneConfig& config) {
    config.validate();
    Rng rng(seed);
    const std::size_t g = config.grid, s = config.object_size, T = config.frames;

    SceneSequence sc;
    sc.seed = seed;
    sc.config = config;

    std::vector<std::size_t> bands(g / s);
    for (std::size_t i = 0; i < bands.size(); ++i) bands[i] = i * s;
    std::shuffle(bands.begin(), bands.end(), std::mt19937_64(rng.next()));
    std::size_t next_band = 0;

    auto place = [&](Role role, std::size_t cls) {
        SceneObject o{role, cls, bands[next_band++], {}, {}};
        const double bright = rng.uniform(0.7, 1.0);
        for (std::size_t c = 0; c < 3; ++c) o.color[c] = kClassColors[cls][c] * bright;
        if (o.moving()) {
            const std::size_t travel = config.speed * (T - 1);
            const std::size_t start = pick_cell(rng, g - s - travel);
            const bool rightward = rng.bernoulli(0.5);
            for (std::size_t t = 0; t < T; ++t) {
                o.col.push_back(rightward ? start + config.speed * t : start + travel - config.speed * t);
            }
        } else {
            o.col.assign(T, pick_cell(rng, g - s));
        }
        sc.objects.push_back(o);
    };

    std::vector<std::size_t> used;
    std::size_t sounder_cls = 0;
    if (config.moving_sounder) {
        sounder_cls = pick_class(rng, {});
        used.push_back(sounder_cls);
        place(Role::MovingSounder, sounder_cls);
    }
    if (rng.bernoulli(config.distractor_prob)) {
        const std::size_t cls = pick_class(rng, used);
        used.push_back(cls);
        place(Role::Distractor, cls);
    }
    if (!config.moving_sounder || rng.bernoulli(config.stationary_prob)) {
        const std::size_t cls = pick_class(rng, used);
        used.push_back(cls);
        place(Role::StationarySounder, cls);
        if (!config.moving_sounder) sounder_cls = cls;
    }
    if (config.moving_sounder && rng.bernoulli(config.decoy_prob)) place(Role::Decoy, sounder_cls);

    std::vector<double> texture(g * g);
    for (std::size_t br = 0; br < g; br += kTextureBlock) {
        for (std::size_t bc = 0; bc < g; bc += kTextureBlock) {
            const double v = rng.uniform(0.0, kTextureMax);
            for (std::size_t r = br; r < br + kTextureBlock; ++r) {
                for (std::size_t c = bc; c < bc + kTextureBlock; ++c) texture[r * g + c] = v;
            }
        }
    }

    std::vector<BinaryMask> masks;
    std::vector<metrics::LabelGrid> labels;
    for (std::size_t t = 0; t < T; ++t) {
        std::vector<double> px(g * g * 3);
        for (std::size_t i = 0; i < g * g; ++i) px[i * 3] = px[i * 3 + 1] = px[i * 3 + 2] = texture[i];
        BinaryMask gt(g, g);
        metrics::LabelGrid lab{g, g, std::vector<std::size_t>(g * g, 0)};
        for (const auto& o : sc.objects) {
            for (std::size_t r = o.row; r < o.row + s; ++r) {
                for (std::size_t c = o.col[t]; c < o.col[t] + s; ++c) {
                    for (std::size_t ch = 0; ch < 3; ++ch) px[(r * g + c) * 3 + ch] = o.color[ch];
                    if (o.sounding()) {
                        gt.set(r, c, true);
                        lab.ids[r * g + c] = o.class_id + 1;
                    }
                }
            }
        }
        for (auto& v : px) v = std::clamp(v + rng.uniform(-config.pixel_noise, config.pixel_noise), 0.0, 1.0);
        sc.frames.emplace_back(g, g, 3, std::move(px));
        masks.push_back(std::move(gt));
        labels.push_back(std::move(lab));
    }
    sc.gt = GroundTruthStore(std::move(masks), std::move(labels));

    const auto sounding = sc.sounding_classes();
    sc.class_labels.assign(T, sounding);

    std::vector<double> clean(config.audio_dim, 0.0);
    for (auto k : sounding) {
        const auto v = class_audio(k, config.audio_dim);
        for (std::size_t i = 0; i < v.size(); ++i) clean[i] += v[i];
    }
    for (std::size_t t = 0; t < T; ++t) {
        auto a = clean;
        for (auto& x : a) x += rng.normal(0.0, config.audio_noise);
        sc.audio.push_back(std::move(a));
    }

    std::vector<const SceneObject*> by_row;
    for (const auto& o : sc.objects) by_row.push_back(&o);
    std::sort(by_row.begin(), by_row.end(), [](auto* a, auto* b) { return a->row < b->row; });
    std::string desc;
    for (const auto* o : by_row) {
        if (!desc.empty()) desc += ", ";
        desc += std::string("a ") + kClassNames[o->class_id] + (o->moving() ? " moving" : " standing still");
    }
    sc.prompt1 = {desc + ".", vta::PromptKind::SceneDescription};
    std::string list;
    for (auto k : sounding) {
        if (!list.empty()) list += ", ";
        list += kClassNames[k];
    }
    sc.prompt2 = {list + ".", vta::PromptKind::SoundingObjects};
    return sc;
}

std::vector<SceneSequence> gen_scenes(std::uint64_t base, std::size_t count, const SceneConfig& config) {
    std::vector<SceneSequence> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(gen_scene(derive_seed(base, i), config));
    return out;
}

}  // namespace ssp::scene
