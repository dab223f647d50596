#pragma once

// Visual-textual alignment at toy scale.
//
// Each prompt is tokenized and embedded, frames are cut into patch embeddings, and the two
// attention masks are concatenated (text first). A stack of post-norm encoder layers then runs
// twice over the text positions: the first pass cross-attends to the visual patches, the second
// cross-attends to the first pass output. The result is mean-pooled over real tokens, projected
// to the decoder width and normalized, giving one aligned vector per prompt. fuse_features adds
// both aligned vectors to every location of a feature map and normalizes over channels.
//
// Pretrained text/vision towers are replaced by small randomly initialized learnable ones with
// the same interfaces.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ssp/grid.hpp"
#include "ssp/random.hpp"
#include "ssp/tensor.hpp"

namespace ssp::vta {

using AttnMask = std::vector<std::uint8_t>;

/// Additive logit applied to masked key positions before softmax.
inline constexpr double kMaskedLogit = -1e9;

enum class PromptKind { SceneDescription, SoundingObjects };

struct TextPrompt {
    std::string text;
    PromptKind kind = PromptKind::SceneDescription;
};

struct TokenSeq {
    std::vector<std::size_t> ids;
    AttnMask attn;
    std::size_t real_tokens() const;
};

inline constexpr std::size_t kPadId = 0;
inline constexpr std::size_t kEmptyId = 1;

enum class Normalization { LayerNorm, L2 };

struct VtaConfig {
    std::size_t d_model = 32;
    std::size_t heads = 2;
    std::size_t layers = 2;
    std::size_t max_len = 16;
    std::size_t vocab = 1024;
    std::size_t ffn_width = 64;
    std::size_t out_dim = 16;  // C', the decoder channel width
    std::size_t patch = 8;
    std::size_t channels = 3;
    bool separate_refine_weights = false;
    Normalization normalization = Normalization::LayerNorm;

    void validate() const;
};

struct AttentionParams {
    std::vector<ad::Tensor> wq, wk, wv;  // one (d_model, d_model/heads) matrix per head
    ad::Tensor wo, bo;
};

struct EncoderLayerParams {
    AttentionParams self_attn;
    AttentionParams cross_attn;
    ad::Tensor ln1_gain, ln1_bias, ln2_gain, ln2_bias, ln3_gain, ln3_bias;
    ad::Tensor ff_w1, ff_b1, ff_w2, ff_b2;
};

struct VtaParams {
    VtaConfig config;
    ad::Tensor token_table;  // (vocab, d_model)
    ad::Tensor text_w, text_b;
    ad::Tensor vis_w, vis_b;  // (patch*patch*channels, d_model)
    std::vector<EncoderLayerParams> layers;
    std::vector<EncoderLayerParams> refine_layers;  // empty unless separate_refine_weights
    ad::Tensor out_w, out_b;  // (d_model, out_dim)

    static VtaParams init(const VtaConfig& config, Rng& rng);
    std::vector<ad::Tensor> parameters() const;
    const std::vector<EncoderLayerParams>& second_pass_layers() const {
        return refine_layers.empty() ? layers : refine_layers;
    }
};

/// Lowercases, splits on anything that is not a letter or digit, hashes each token into
/// [2, vocab), then truncates/pads to max_len. Empty text yields a single special token.
TokenSeq tokenize(const TextPrompt& prompt, std::size_t max_len, std::size_t vocab = 1024);

/// Lowercased word pieces, before hashing.
std::vector<std::string> split_words(const std::string& text);

/// Table lookup followed by the learned text affine: (max_len, d_model).
ad::Tensor embed_text(const TokenSeq& tokens, const VtaParams& params);

/// Non-overlapping patches flattened in (row, col, channel) order, then projected:
/// ((H/patch)*(W/patch), d_model).
ad::Tensor embed_visual(const ImageFrame& frame, const VtaParams& params, std::size_t patch);

/// Concatenation, text mask first.
AttnMask unify_attention_masks(std::span<const std::uint8_t> text_attn, std::span<const std::uint8_t> vis_attn);

/// Multi-head attention of `queries` over `context`; keys whose flag is 0 receive kMaskedLogit.
ad::Tensor attention(const ad::Tensor& queries, const ad::Tensor& context, std::span<const std::uint8_t> key_mask,
                     const AttentionParams& params);

/// Attention probabilities of one head (Lq, Lk), exposed for inspection.
ad::Tensor attention_weights(const ad::Tensor& queries, const ad::Tensor& context,
                             std::span<const std::uint8_t> key_mask, const AttentionParams& params,
                             std::size_t head);

/// First pass: text self-attention + cross-attention to the visual tokens + feed-forward, per layer.
ad::Tensor cross_encode(const ad::Tensor& text_emb, std::span<const std::uint8_t> unified_attn,
                        const ad::Tensor& vis_emb, std::span<const std::uint8_t> vis_attn, const VtaParams& params);

/// Second pass: the same stack with the first-pass output as cross-attention context.
ad::Tensor refine(const ad::Tensor& text_emb, std::span<const std::uint8_t> unified_attn, const ad::Tensor& align,
                  const VtaParams& params);

/// Single cross-attention block (no self-attention, no second pass). Used when prompts are
/// enabled without the alignment module.
ad::Tensor attend_once(const ad::Tensor& text_emb, const ad::Tensor& vis_emb, std::span<const std::uint8_t> vis_attn,
                       const VtaParams& params);

/// Mean-pool over valid tokens, project to out_dim, normalize: shape (out_dim).
ad::Tensor project_normalize(const ad::Tensor& align, std::span<const std::uint8_t> attn, const VtaParams& params);

/// z_v (T, C, H, W) + a1 + a2 broadcast over T, H, W, then layer norm over C.
ad::Tensor fuse_features(const ad::Tensor& z_v, const ad::Tensor& a1, const ad::Tensor& a2);

struct PromptTrace {
    TokenSeq tokens;
    AttnMask unified;
};

struct VtaOutput {
    ad::Tensor align1, align2;
    PromptTrace trace1, trace2;
};

/// Visual tokens for a clip: every frame's patch embeddings stacked, all marked valid.
ad::Tensor embed_clip(std::span<const ImageFrame> frames, const VtaParams& params);

/// Both prompts through the full two-pass procedure with shared parameters.
VtaOutput align_prompts(const TextPrompt& a1, const TextPrompt& a2, const ad::Tensor& vis_emb,
                        std::span<const std::uint8_t> vis_attn, const VtaParams& params);

/// Both prompts through attend_once.
VtaOutput attend_prompts(const TextPrompt& a1, const TextPrompt& a2, const ad::Tensor& vis_emb,
                         std::span<const std::uint8_t> vis_attn, const VtaParams& params);

}  // namespace ssp::vta
