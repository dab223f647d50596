#include "ssp/vta.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "ssp/error.hpp"

namespace ssp::vta {

using ad::Tensor;

std::size_t TokenSeq::real_tokens() const {
    return static_cast<std::size_t>(std::count(attn.begin(), attn.end(), std::uint8_t{1}));
}

void VtaConfig::validate() const {
    if (d_model == 0 || heads == 0 || d_model % heads != 0) throw ValueError("vta: d_model must be a positive multiple of heads");
    if (layers == 0) throw ValueError("vta: need at least one encoder layer");
    if (max_len == 0) throw ValueError("vta: max_len must be >= 1");
    if (vocab < 3) throw ValueError("vta: vocabulary must hold padding, the empty token and one word");
    if (patch == 0 || out_dim == 0 || ffn_width == 0) throw ValueError("vta: sizes must be positive");
    if (channels != 1 && channels != 3) throw ValueError("vta: channels must be 1 or 3");
}

namespace {

AttentionParams init_attention(const VtaConfig& c, Rng& rng) {
    AttentionParams p;
    const std::size_t dh = c.d_model / c.heads;
    for (std::size_t h = 0; h < c.heads; ++h) {
        p.wq.push_back(rng.glorot(c.d_model, dh));
        p.wk.push_back(rng.glorot(c.d_model, dh));
        p.wv.push_back(rng.glorot(c.d_model, dh));
    }
    p.wo = rng.glorot(c.d_model, c.d_model);
    p.bo = Tensor::zeros({c.d_model}, true);
    return p;
}

EncoderLayerParams init_layer(const VtaConfig& c, Rng& rng) {
    EncoderLayerParams l;
    l.self_attn = init_attention(c, rng);
    l.cross_attn = init_attention(c, rng);
    l.ln1_gain = Tensor::full({c.d_model}, 1.0, true);
    l.ln1_bias = Tensor::zeros({c.d_model}, true);
    l.ln2_gain = Tensor::full({c.d_model}, 1.0, true);
    l.ln2_bias = Tensor::zeros({c.d_model}, true);
    l.ln3_gain = Tensor::full({c.d_model}, 1.0, true);
    l.ln3_bias = Tensor::zeros({c.d_model}, true);
    l.ff_w1 = rng.glorot(c.d_model, c.ffn_width);
    l.ff_b1 = Tensor::zeros({c.ffn_width}, true);
    l.ff_w2 = rng.glorot(c.ffn_width, c.d_model);
    l.ff_b2 = Tensor::zeros({c.d_model}, true);
    return l;
}

void collect(const AttentionParams& a, std::vector<Tensor>& out) {
    for (const auto& t : a.wq) out.push_back(t);
    for (const auto& t : a.wk) out.push_back(t);
    for (const auto& t : a.wv) out.push_back(t);
    out.push_back(a.wo);
    out.push_back(a.bo);
}

void collect(const EncoderLayerParams& l, std::vector<Tensor>& out) {
    collect(l.self_attn, out);
    collect(l.cross_attn, out);
    for (const auto& t : {l.ln1_gain, l.ln1_bias, l.ln2_gain, l.ln2_bias, l.ln3_gain, l.ln3_bias, l.ff_w1, l.ff_b1,
                          l.ff_w2, l.ff_b2})
        out.push_back(t);
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) { return ad::add(ad::matmul(x, w), b); }

// Post-norm residual: LN(x + y) * gain + bias over the feature axis.
Tensor residual_norm(const Tensor& x, const Tensor& y, const Tensor& gain, const Tensor& bias) {
    return ad::add(ad::mul(ad::layer_norm(ad::add(x, y), 1), gain), bias);
}

Tensor mask_bias(std::span<const std::uint8_t> key_mask) {
    std::vector<double> bias(key_mask.size());
    bool any = false;
    for (std::size_t i = 0; i < bias.size(); ++i) {
        bias[i] = key_mask[i] ? 0.0 : kMaskedLogit;
        any = any || key_mask[i];
    }
    if (!any) throw ContractError("attention: every key position is masked");
    const std::size_t n = bias.size();
    return Tensor::constant({n}, std::move(bias));
}

Tensor head_weights(const Tensor& queries, const Tensor& context, const Tensor& bias, const AttentionParams& p,
                    std::size_t h) {
    const Tensor q = ad::matmul(queries, p.wq[h]);
    const Tensor k = ad::matmul(context, p.wk[h]);
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(q.dim(1)));
    const Tensor logits = ad::add(ad::scale(ad::matmul(q, ad::transpose(k)), inv_sqrt), bias);
    return ad::softmax(logits, 1);
}

Tensor encoder_layer(const Tensor& x, std::span<const std::uint8_t> self_mask, const Tensor& context,
                     std::span<const std::uint8_t> context_mask, const EncoderLayerParams& l) {
    Tensor h = residual_norm(x, attention(x, x, self_mask, l.self_attn), l.ln1_gain, l.ln1_bias);
    h = residual_norm(h, attention(h, context, context_mask, l.cross_attn), l.ln2_gain, l.ln2_bias);
    const Tensor ff = affine(ad::tanh(affine(h, l.ff_w1, l.ff_b1)), l.ff_w2, l.ff_b2);
    return residual_norm(h, ff, l.ln3_gain, l.ln3_bias);
}

void check_model_width(const Tensor& t, const VtaParams& params, const char* what) {
    if (t.rank() != 2 || t.dim(1) != params.config.d_model) {
        throw ShapeError(std::string(what) + ": expected (L, " + std::to_string(params.config.d_model) + "), got " +
                         ad::to_string(t.shape()));
    }
}

std::span<const std::uint8_t> text_part(std::span<const std::uint8_t> unified, std::size_t text_len,
                                         const char* what) {
    if (unified.size() < text_len) {
        throw ShapeError(std::string(what) + ": unified mask shorter than the text sequence");
    }
    return unified.first(text_len);
}

}  // namespace

VtaParams VtaParams::init(const VtaConfig& config, Rng& rng) {
    config.validate();
    VtaParams p;
    p.config = config;
    const std::size_t d = config.d_model;
    p.token_table = Tensor::parameter({config.vocab, d}, rng.uniform_vector(config.vocab * d, -0.5, 0.5));
    p.text_w = rng.glorot(d, d);
    p.text_b = Tensor::zeros({d}, true);
    const std::size_t patch_len = config.patch * config.patch * config.channels;
    p.vis_w = rng.glorot(patch_len, d);
    p.vis_b = Tensor::zeros({d}, true);
    for (std::size_t i = 0; i < config.layers; ++i) p.layers.push_back(init_layer(config, rng));
    if (config.separate_refine_weights) {
        for (std::size_t i = 0; i < config.layers; ++i) p.refine_layers.push_back(init_layer(config, rng));
    }
    p.out_w = rng.glorot(d, config.out_dim);
    p.out_b = Tensor::zeros({config.out_dim}, true);
    return p;
}

std::vector<Tensor> VtaParams::parameters() const {
    std::vector<Tensor> out{token_table, text_w, text_b, vis_w, vis_b};
    for (const auto& l : layers) collect(l, out);
    for (const auto& l : refine_layers) collect(l, out);
    out.push_back(out_w);
    out.push_back(out_b);
    return out;
}

std::vector<std::string> split_words(const std::string& text) {
    std::vector<std::string> words;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            words.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) words.push_back(std::move(cur));
    return words;
}

TokenSeq tokenize(const TextPrompt& prompt, std::size_t max_len, std::size_t vocab) {
    if (max_len == 0) throw ValueError("tokenize: max_len must be >= 1");
    if (vocab < 3) throw ValueError("tokenize: vocabulary too small");
    TokenSeq seq;
    seq.ids.assign(max_len, kPadId);
    seq.attn.assign(max_len, 0);
    const auto words = split_words(prompt.text);
    if (words.empty()) {
        seq.ids[0] = kEmptyId;
        seq.attn[0] = 1;
        return seq;
    }
    const std::size_t n = std::min(words.size(), max_len);
    for (std::size_t i = 0; i < n; ++i) {
        seq.ids[i] = 2 + static_cast<std::size_t>(fnv1a(words[i]) % (vocab - 2));
        seq.attn[i] = 1;
    }
    return seq;
}

Tensor embed_text(const TokenSeq& tokens, const VtaParams& params) {
    const Tensor rows = ad::gather_rows(params.token_table, tokens.ids);
    return affine(rows, params.text_w, params.text_b);
}

Tensor embed_visual(const ImageFrame& frame, const VtaParams& params, std::size_t patch) {
    if (patch == 0 || frame.height() % patch != 0 || frame.width() % patch != 0) {
        throw ShapeError("embed_visual: " + std::to_string(frame.height()) + "x" + std::to_string(frame.width()) +
                         " frame is not divisible by patch " + std::to_string(patch));
    }
    const std::size_t ch = frame.channels();
    const std::size_t patch_len = patch * patch * ch;
    if (params.vis_w.dim(0) != patch_len) {
        throw ShapeError("embed_visual: projection expects patches of " + std::to_string(params.vis_w.dim(0)) +
                         " values, frame gives " + std::to_string(patch_len));
    }
    const std::size_t ph = frame.height() / patch, pw = frame.width() / patch;
    std::vector<double> rows(ph * pw * patch_len);
    std::size_t o = 0;
    for (std::size_t py = 0; py < ph; ++py)
        for (std::size_t px = 0; px < pw; ++px)
            for (std::size_t y = 0; y < patch; ++y)
                for (std::size_t x = 0; x < patch; ++x)
                    for (std::size_t c = 0; c < ch; ++c) rows[o++] = frame.at(py * patch + y, px * patch + x, c);
    return affine(Tensor::constant({ph * pw, patch_len}, std::move(rows)), params.vis_w, params.vis_b);
}

AttnMask unify_attention_masks(std::span<const std::uint8_t> text_attn, std::span<const std::uint8_t> vis_attn) {
    AttnMask out(text_attn.begin(), text_attn.end());
    out.insert(out.end(), vis_attn.begin(), vis_attn.end());
    return out;
}

Tensor attention_weights(const Tensor& queries, const Tensor& context, std::span<const std::uint8_t> key_mask,
                         const AttentionParams& params, std::size_t head) {
    if (context.dim(0) != key_mask.size()) throw ShapeError("attention: key mask length differs from context length");
    return head_weights(queries, context, mask_bias(key_mask), params, head);
}

Tensor attention(const Tensor& queries, const Tensor& context, std::span<const std::uint8_t> key_mask,
                 const AttentionParams& params) {
    if (queries.rank() != 2 || context.rank() != 2 || queries.dim(1) != context.dim(1)) {
        throw ShapeError("attention: incompatible shapes " + ad::to_string(queries.shape()) + ", " +
                         ad::to_string(context.shape()));
    }
    if (context.dim(0) != key_mask.size()) throw ShapeError("attention: key mask length differs from context length");
    const Tensor bias = mask_bias(key_mask);
    Tensor heads;
    for (std::size_t h = 0; h < params.wq.size(); ++h) {
        const Tensor w = head_weights(queries, context, bias, params, h);
        const Tensor out = ad::matmul(w, ad::matmul(context, params.wv[h]));
        heads = heads.defined() ? ad::concat(heads, out, 1) : out;
    }
    return affine(heads, params.wo, params.bo);
}

Tensor cross_encode(const Tensor& text_emb, std::span<const std::uint8_t> unified_attn, const Tensor& vis_emb,
                    std::span<const std::uint8_t> vis_attn, const VtaParams& params) {
    check_model_width(text_emb, params, "cross_encode");
    check_model_width(vis_emb, params, "cross_encode");
    const std::size_t lt = text_emb.dim(0);
    if (unified_attn.size() != lt + vis_attn.size()) {
        throw ShapeError("cross_encode: unified mask length " + std::to_string(unified_attn.size()) + " != " +
                         std::to_string(lt) + " + " + std::to_string(vis_attn.size()));
    }
    if (!std::equal(vis_attn.begin(), vis_attn.end(), unified_attn.begin() + static_cast<std::ptrdiff_t>(lt))) {
        throw ShapeError("cross_encode: unified mask does not end with the visual mask");
    }
    const auto text_mask = text_part(unified_attn, lt, "cross_encode");
    Tensor x = text_emb;
    for (const auto& layer : params.layers) x = encoder_layer(x, text_mask, vis_emb, vis_attn, layer);
    return x;
}

Tensor refine(const Tensor& text_emb, std::span<const std::uint8_t> unified_attn, const Tensor& align,
              const VtaParams& params) {
    check_model_width(text_emb, params, "refine");
    check_model_width(align, params, "refine");
    const std::size_t lt = text_emb.dim(0);
    if (align.dim(0) != lt) throw ShapeError("refine: first-pass output length differs from the text length");
    const auto text_mask = text_part(unified_attn, lt, "refine");
    Tensor x = text_emb;
    for (const auto& layer : params.second_pass_layers()) x = encoder_layer(x, text_mask, align, text_mask, layer);
    return x;
}

Tensor attend_once(const Tensor& text_emb, const Tensor& vis_emb, std::span<const std::uint8_t> vis_attn,
                   const VtaParams& params) {
    check_model_width(text_emb, params, "attend_once");
    check_model_width(vis_emb, params, "attend_once");
    const auto& l = params.layers.front();
    return residual_norm(text_emb, attention(text_emb, vis_emb, vis_attn, l.cross_attn), l.ln2_gain, l.ln2_bias);
}

Tensor project_normalize(const Tensor& align, std::span<const std::uint8_t> attn, const VtaParams& params) {
    check_model_width(align, params, "project_normalize");
    if (attn.size() != align.dim(0)) throw ShapeError("project_normalize: mask length differs from sequence length");
    const auto valid = static_cast<std::size_t>(std::count(attn.begin(), attn.end(), std::uint8_t{1}));
    if (valid == 0) throw ContractError("project_normalize: no valid tokens to pool");
    std::vector<double> w(attn.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = attn[i] ? 1.0 / static_cast<double>(valid) : 0.0;
    const Tensor pooled = ad::matmul(Tensor::constant({1, attn.size()}, std::move(w)), align);
    const Tensor projected = affine(pooled, params.out_w, params.out_b);
    Tensor normalized;
    if (params.config.normalization == Normalization::LayerNorm) {
        normalized = ad::layer_norm(projected, 1);
    } else {
        const Tensor norm = ad::sqrt(ad::add_scalar(ad::sum(ad::mul(projected, projected)), 1e-12));
        normalized = ad::div(projected, norm);
    }
    return ad::reshape(normalized, {params.config.out_dim});
}

Tensor fuse_features(const Tensor& z_v, const Tensor& a1, const Tensor& a2) {
    if (z_v.rank() != 4) throw ShapeError("fuse_features: expected (T,C,H,W), got " + ad::to_string(z_v.shape()));
    const std::size_t c = z_v.dim(1);
    if (a1.shape() != ad::Shape{c} || a2.shape() != ad::Shape{c}) {
        throw ShapeError("fuse_features: aligned features " + ad::to_string(a1.shape()) + ", " +
                         ad::to_string(a2.shape()) + " do not match channel width " + std::to_string(c));
    }
    const Tensor channels_last = ad::permute(z_v, {0, 2, 3, 1});
    const Tensor fused = ad::layer_norm(ad::add(ad::add(channels_last, a1), a2), 3);
    return ad::permute(fused, {0, 3, 1, 2});
}

Tensor embed_clip(std::span<const ImageFrame> frames, const VtaParams& params) {
    if (frames.empty()) throw EmptyInputError("embed_clip: no frames");
    Tensor out;
    for (const auto& f : frames) {
        const Tensor e = embed_visual(f, params, params.config.patch);
        out = out.defined() ? ad::concat(out, e, 0) : e;
    }
    return out;
}

namespace {

template <typename Encode>
VtaOutput run_prompts(const TextPrompt& a1, const TextPrompt& a2, std::span<const std::uint8_t> vis_attn,
                      const VtaParams& params, Encode encode) {
    VtaOutput out;
    auto one = [&](const TextPrompt& p, PromptTrace& trace) {
        trace.tokens = tokenize(p, params.config.max_len, params.config.vocab);
        trace.unified = unify_attention_masks(trace.tokens.attn, vis_attn);
        const Tensor text = embed_text(trace.tokens, params);
        return project_normalize(encode(text, trace.unified), trace.tokens.attn, params);
    };
    out.align1 = one(a1, out.trace1);
    out.align2 = one(a2, out.trace2);
    return out;
}

}  // namespace

VtaOutput align_prompts(const TextPrompt& a1, const TextPrompt& a2, const Tensor& vis_emb,
                        std::span<const std::uint8_t> vis_attn, const VtaParams& params) {
    return run_prompts(a1, a2, vis_attn, params, [&](const Tensor& text, const AttnMask& unified) {
        const Tensor first = cross_encode(text, unified, vis_emb, vis_attn, params);
        return refine(text, unified, first, params);
    });
}

VtaOutput attend_prompts(const TextPrompt& a1, const TextPrompt& a2, const Tensor& vis_emb,
                         std::span<const std::uint8_t> vis_attn, const VtaParams& params) {
    return run_prompts(a1, a2, vis_attn, params,
                       [&](const Tensor& text, const AttnMask&) { return attend_once(text, vis_emb, vis_attn, params); });
}

}  // namespace ssp::vta
