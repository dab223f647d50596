#pragma once

// Desk-scale segmentation model: a four-scale patch-pool encoder, audio-conditioned object
// queries, an FPN-style decoder with one dot-product mask head per query, and optional fusion of
// the two aligned prompt vectors into the decoder's last hidden state.
//
// Layouts are channels-last, (T, H, W, C), except where noted.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "ssp/grid.hpp"
#include "ssp/random.hpp"
#include "ssp/tensor.hpp"
#include "ssp/vta.hpp"

namespace ssp::model {

inline constexpr std::size_t kScales = 4;

struct ModelConfig {
    std::size_t queries = 4;  // N, one fixed class slot per query
    std::size_t classes = 4;  // K
    std::size_t audio_dim = 16;
    std::size_t channels = 16;  // C'
    std::array<std::size_t, kScales> widths = {8, 16, 32, 64};
    std::size_t image_channels = 3;

    void validate() const;
};

struct ModelParams {
    ModelConfig config;
    std::array<ad::Tensor, kScales> enc_w, enc_b;  // (image_channels, width_s), (width_s)
    std::array<ad::Tensor, kScales> lat_w, lat_b;  // (width_s, C'), (C')
    ad::Tensor queries;                            // (N, audio_dim)
    ad::Tensor query_w;                            // (audio_dim, C')
    ad::Tensor mask_bias;                          // scalar
    ad::Tensor cls_w, cls_b;                       // (audio_dim, K), (K)
    std::optional<vta::VtaParams> vta;

    static ModelParams init(const ModelConfig& config, Rng& rng, const std::optional<vta::VtaConfig>& vta_config);
    std::vector<ad::Tensor> parameters() const;
};

/// Stride of scale s relative to the input: 4, 8, 16, 32.
constexpr std::size_t scale_stride(std::size_t s) { return std::size_t{4} << s; }

/// Frames stacked into a constant (T, H, W, C) tensor.
ad::Tensor frames_tensor(std::span<const ImageFrame> frames);

/// Per scale: patch-pool by the scale stride, project channels, layer-normalize over channels,
/// add bias. Throws ShapeError unless H and W are multiples of 32.
std::array<ad::Tensor, kScales> toy_encoder(const ad::Tensor& x, const ModelParams& params);

/// s[n,t] = cosine(q[n], z_a[t]); out[n,t,:] = s[n,t] q[n,:]. Shape (N, T, C_A).
ad::Tensor map_object_queries(const ad::Tensor& z_a, const ad::Tensor& q);

struct DecoderOutput {
    ad::Tensor hidden;        // (T, h, w, C') after fusion, h = H/4
    ad::Tensor mask_logits;   // (T, N, h, w)
    ad::Tensor class_logits;  // (N, K)
};

/// Top-down merge of the four scales into the 1/4 map, fusion with the aligned vectors
/// (zeros when absent), then per-query mask logits and pooled-query class logits.
DecoderOutput toy_decoder(const std::array<ad::Tensor, kScales>& features, const ad::Tensor& mapped_queries,
                          const ModelParams& params, const ad::Tensor& align1 = {}, const ad::Tensor& align2 = {});

enum class PromptMode { None, AttendOnce, Vta };

struct ForwardInput {
    std::span<const ImageFrame> frames;      // already pre-masked if pre-masking is on
    std::span<const ImageFrame> raw_frames;  // visual tokens for the prompt path
    const std::vector<std::vector<double>>* audio = nullptr;
    const vta::TextPrompt* prompt1 = nullptr;
    const vta::TextPrompt* prompt2 = nullptr;
};

struct ForwardOutput {
    DecoderOutput decoder;
    ad::Tensor probs;  // (T, H, W, N), sigmoid of the nearest-upsampled mask logits
};

ForwardOutput forward(const ForwardInput& in, const ModelParams& params, PromptMode mode);

/// Foreground wherever any query's probability exceeds 0.5, one mask per frame.
std::vector<BinaryMask> predict_masks(const ad::Tensor& probs);

}  // namespace ssp::model
