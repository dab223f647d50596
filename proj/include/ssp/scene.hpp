#pragma once

// Synthetic audio-visual clips.
//
// Each clip is T frames of a grid x grid RGB image over a static gray texture. Objects are
// object_size squares living in separate horizontal bands: a moving sounding object (optional),
// a moving silent distractor of another class, an optional stationary sounding object, and an
// optional static silent decoy painted in the moving sounder's class color. Ground truth marks
// every sounding pixel. Audio features are the sum of class-keyed unit vectors over the
// sounding classes plus Gaussian noise.

#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ssp/grid.hpp"
#include "ssp/metrics.hpp"
#include "ssp/vta.hpp"

namespace ssp::scene {

inline constexpr std::size_t kNumClasses = 4;
inline constexpr std::array<const char*, kNumClasses> kClassNames = {"guitar", "dog", "piano", "clock"};

struct SceneConfig {
    std::size_t grid = 32;
    std::size_t frames = 4;
    std::size_t object_size = 8;
    std::size_t speed = 4;  // pixels per frame, horizontal
    std::size_t audio_dim = 16;
    bool moving_sounder = true;
    double stationary_prob = 0.0;
    double distractor_prob = 1.0;
    double decoy_prob = 0.75;
    double audio_noise = 0.05;
    double pixel_noise = 0.01;

    /// Throws ValueError when objects cannot fit or a probability is outside [0,1].
    void validate() const;
};

enum class Role { MovingSounder, Distractor, StationarySounder, Decoy };

const char* role_name(Role role);

struct SceneObject {
    Role role;
    std::size_t class_id;
    std::size_t row;           // top edge
    std::vector<std::size_t> col;  // left edge per frame
    std::array<double, 3> color;
    bool sounding() const { return role == Role::MovingSounder || role == Role::StationarySounder; }
    bool moving() const { return role == Role::MovingSounder || role == Role::Distractor; }
};

/// Ground-truth masks and label grids behind an access counter. Reads made while an
/// InferenceGuard is alive on the calling thread are recorded as leaks.
class GroundTruthStore {
public:
    GroundTruthStore() = default;
    GroundTruthStore(std::vector<BinaryMask> masks, std::vector<metrics::LabelGrid> labels);

    std::size_t frames() const { return masks_.size(); }
    const BinaryMask& mask(std::size_t t) const;
    /// Label ids: 0 background, class_id + 1 for a sounding object of that class.
    const metrics::LabelGrid& labels(std::size_t t) const;

    std::size_t accesses() const { return counters_->total.load(); }
    std::size_t leaks() const { return counters_->leaks.load(); }

private:
    struct Counters {
        std::atomic<std::size_t> total{0};
        std::atomic<std::size_t> leaks{0};
    };
    void touch() const;

    std::vector<BinaryMask> masks_;
    std::vector<metrics::LabelGrid> labels_;
    std::shared_ptr<Counters> counters_ = std::make_shared<Counters>();
};

/// Marks the current thread as running inference for the guard's lifetime.
class InferenceGuard {
public:
    InferenceGuard();
    ~InferenceGuard();
    InferenceGuard(const InferenceGuard&) = delete;
    InferenceGuard& operator=(const InferenceGuard&) = delete;

    static bool active();
};

struct SceneSequence {
    std::uint64_t seed = 0;
    SceneConfig config;
    std::vector<ImageFrame> frames;
    GroundTruthStore gt;
    std::vector<std::vector<std::size_t>> class_labels;  // sounding class ids per frame, ascending
    std::vector<std::vector<double>> audio;              // T x audio_dim
    vta::TextPrompt prompt1, prompt2;
    std::vector<SceneObject> objects;

    std::vector<std::size_t> sounding_classes() const;
};

/// Unit vector keyed by class id, identical across scenes; distinct classes are orthogonal.
std::vector<double> class_audio(std::size_t class_id, std::size_t dim);

SceneSequence gen_scene(std::uint64_t seed, const SceneConfig& config);

/// Scenes seeded derive_seed(base, i) for i in [0, count).
std::vector<SceneSequence> gen_scenes(std::uint64_t base, std::size_t count, const SceneConfig& config);

}  // namespace ssp::scene
