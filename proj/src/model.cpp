#include "ssp/model.hpp"

#include "ssp/error.hpp"

namespace ssp::model {

using ad::Tensor;

namespace {

Tensor channels_affine(const Tensor& x, const Tensor& w, const Tensor& b) {
    const std::size_t t = x.dim(0), h = x.dim(1), wd = x.dim(2), c = x.dim(3);
    const Tensor y = ad::add(ad::matmul(ad::reshape(x, {t * h * wd, c}), w), b);
    return ad::reshape(y, {t, h, wd, w.dim(1)});
}

}  // namespace

void ModelConfig::validate() const {
    if (queries == 0 || classes == 0 || audio_dim == 0 || channels == 0 || image_channels == 0) {
        throw ValueError("model: every size must be >= 1");
    }
    if (queries < classes) throw ValueError("model: need at least one query per class");
    for (auto w : widths) {
        if (w == 0) throw ValueError("model: encoder widths must be >= 1");
    }
}

ModelParams ModelParams::init(const ModelConfig& config, Rng& rng, const std::optional<vta::VtaConfig>& vta_config) {
    config.validate();
    ModelParams p;
    p.config = config;
    for (std::size_t s = 0; s < kScales; ++s) {
        p.enc_w[s] = rng.glorot(config.image_channels, config.widths[s]);
        p.enc_b[s] = Tensor::zeros({config.widths[s]}, true);
        p.lat_w[s] = rng.glorot(config.widths[s], config.channels);
        p.lat_b[s] = Tensor::zeros({config.channels}, true);
    }
    p.queries = rng.glorot(config.queries, config.audio_dim);
    p.query_w = rng.glorot(config.audio_dim, config.channels);
    p.mask_bias = Tensor::parameter({}, {-3.0});
    p.cls_w = rng.glorot(config.audio_dim, config.classes);
    p.cls_b = Tensor::zeros({config.classes}, true);
    if (vta_config) {
        if (vta_config->out_dim != config.channels) {
            throw ValueError("model: alignment output width must equal the decoder width");
        }
        if (vta_config->channels != config.image_channels) {
            throw ValueError("model: alignment image channels must equal the model's");
        }
        p.vta = vta::VtaParams::init(*vta_config, rng);
    }
    return p;
}

std::vector<Tensor> ModelParams::parameters() const {
    std::vector<Tensor> out;
    for (std::size_t s = 0; s < kScales; ++s) {
        out.insert(out.end(), {enc_w[s], enc_b[s], lat_w[s], lat_b[s]});
    }
    out.insert(out.end(), {queries, query_w, mask_bias, cls_w, cls_b});
    if (vta) {
        const auto v = vta->parameters();
        out.insert(out.end(), v.begin(), v.end());
    }
    return out;
}

Tensor frames_tensor(std::span<const ImageFrame> frames) {
    if (frames.empty()) throw EmptyInputError("frames_tensor: no frames");
    const auto& f0 = frames.front();
    std::vector<double> data;
    data.reserve(frames.size() * f0.size());
    for (const auto& f : frames) {
        if (f.height() != f0.height() || f.width() != f0.width() || f.channels() != f0.channels()) {
            throw ShapeError("frames_tensor: frames differ in size");
        }
        data.insert(data.end(), f.data().begin(), f.data().end());
    }
    return Tensor::constant({frames.size(), f0.height(), f0.width(), f0.channels()}, std::move(data));
}

std::array<Tensor, kScales> toy_encoder(const Tensor& x, const ModelParams& params) {
    if (x.rank() != 4) throw ShapeError("toy_encoder: expected (T,H,W,C), got " + ad::to_string(x.shape()));
    if (x.dim(1) % 32 != 0 || x.dim(2) % 32 != 0) {
        throw ShapeError("toy_encoder: spatial size " + ad::to_string(x.shape()) + " is not a multiple of 32");
    }
    if (x.dim(3) != params.config.image_channels) throw ShapeError("toy_encoder: channel mismatch");
    std::array<Tensor, kScales> out;
    for (std::size_t s = 0; s < kScales; ++s) {
        const Tensor pooled = ad::patch_pool(x, scale_stride(s));
        const std::size_t t = pooled.dim(0), h = pooled.dim(1), w = pooled.dim(2);
        const Tensor proj = ad::matmul(ad::reshape(pooled, {t * h * w, x.dim(3)}), params.enc_w[s]);
        const Tensor normed = ad::add(ad::layer_norm(proj, 1), params.enc_b[s]);
        out[s] = ad::reshape(normed, {t, h, w, params.config.widths[s]});
    }
    return out;
}

Tensor map_object_queries(const Tensor& z_a, const Tensor& q) {
    if (z_a.rank() != 2 || q.rank() != 2 || z_a.dim(1) != q.dim(1)) {
        throw ShapeError("map_object_queries: audio " + ad::to_string(z_a.shape()) + " vs queries " +
                         ad::to_string(q.shape()));
    }
    const std::size_t t = z_a.dim(0), c = q.dim(1);
    const Tensor s = ad::permute(ad::expand(ad::cosine_similarity(q, z_a), {c}), {1, 2, 0});  // (N,T,C)
    const Tensor rows = ad::permute(ad::expand(q, {t}), {1, 0, 2});                            // (N,T,C)
    return ad::mul(s, rows);
}

DecoderOutput toy_decoder(const std::array<Tensor, kScales>& features, const Tensor& mapped_queries,
                          const ModelParams& params, const Tensor& align1, const Tensor& align2) {
    const auto& cfg = params.config;
    for (std::size_t s = 0; s < kScales; ++s) {
        if (features[s].rank() != 4 || features[s].dim(3) != cfg.widths[s]) {
            throw ShapeError("toy_decoder: scale " + std::to_string(s) + " has shape " +
                             ad::to_string(features[s].shape()));
        }
    }
    const std::size_t t = features[0].dim(0), h = features[0].dim(1), w = features[0].dim(2);
    if (mapped_queries.shape() != ad::Shape{cfg.queries, t, cfg.audio_dim}) {
        throw ShapeError("toy_decoder: queries " + ad::to_string(mapped_queries.shape()));
    }

    Tensor top = channels_affine(features[3], params.lat_w[3], params.lat_b[3]);
    for (std::size_t s = kScales - 1; s-- > 0;) {
        top = ad::add(ad::upsample_nearest(top, 2), channels_affine(features[s], params.lat_w[s], params.lat_b[s]));
    }
    const Tensor& hidden = top;

    const Tensor zero = Tensor::zeros({cfg.channels});
    const Tensor a1 = align1.defined() ? align1 : zero;
    const Tensor a2 = align2.defined() ? align2 : zero;
    const Tensor fused =
        ad::permute(vta::fuse_features(ad::permute(hidden, {0, 3, 1, 2}), a1, a2), {0, 2, 3, 1});

    const std::size_t n = cfg.queries;
    const Tensor per_frame = ad::reshape(ad::permute(mapped_queries, {1, 0, 2}), {t * n, cfg.audio_dim});
    const Tensor qp = ad::permute(ad::reshape(ad::matmul(per_frame, params.query_w), {t, n, cfg.channels}), {0, 2, 1});
    const Tensor logits = ad::add(ad::bmm(ad::reshape(fused, {t, h * w, cfg.channels}), qp), params.mask_bias);

    DecoderOutput out;
    out.hidden = fused;
    out.mask_logits = ad::permute(ad::reshape(logits, {t, h, w, n}), {0, 3, 1, 2});
    out.class_logits = ad::add(ad::matmul(ad::mean(mapped_queries, 1), params.cls_w), params.cls_b);
    return out;
}

ForwardOutput forward(const ForwardInput& in, const ModelParams& params, PromptMode mode) {
    if (in.audio == nullptr || in.audio->size() != in.frames.size()) {
        throw ShapeError("forward: need one audio vector per frame");
    }
    std::vector<double> audio;
    for (const auto& a : *in.audio) {
        if (a.size() != params.config.audio_dim) throw ShapeError("forward: audio width mismatch");
        audio.insert(audio.end(), a.begin(), a.end());
    }
    const Tensor z_a = Tensor::constant({in.frames.size(), params.config.audio_dim}, std::move(audio));
    const auto features = toy_encoder(frames_tensor(in.frames), params);
    const Tensor mapped = map_object_queries(z_a, params.queries);

    Tensor a1, a2;
    if (mode != PromptMode::None) {
        if (!params.vta) throw ContractError("forward: prompts requested but the model has no alignment module");
        if (in.prompt1 == nullptr || in.prompt2 == nullptr) throw ContractError("forward: prompts missing");
        const Tensor vis = vta::embed_clip(in.raw_frames, *params.vta);
        const vta::AttnMask vis_attn(vis.dim(0), 1);
        const auto out = mode == PromptMode::Vta ? vta::align_prompts(*in.prompt1, *in.prompt2, vis, vis_attn, *params.vta)
                                                 : vta::attend_prompts(*in.prompt1, *in.prompt2, vis, vis_attn, *params.vta);
        a1 = out.align1;
        a2 = out.align2;
    }

    ForwardOutput out;
    out.decoder = toy_decoder(features, mapped, params, a1, a2);
    const std::size_t stride = scale_stride(0);
    out.probs = ad::sigmoid(ad::upsample_nearest(ad::permute(out.decoder.mask_logits, {0, 2, 3, 1}), stride));
    return out;
}

std::vector<BinaryMask> predict_masks(const Tensor& probs) {
    if (probs.rank() != 4) throw ShapeError("predict_masks: expected (T,H,W,N)");
    const std::size_t t = probs.dim(0), h = probs.dim(1), w = probs.dim(2), n = probs.dim(3);
    const auto v = probs.data();
    std::vector<BinaryMask> out;
    for (std::size_t f = 0; f < t; ++f) {
        BinaryMask m(h, w);
        for (std::size_t r = 0; r < h; ++r) {
            for (std::size_t c = 0; c < w; ++c) {
                const std::size_t base = ((f * h + r) * w + c) * n;
                bool on = false;
                for (std::size_t q = 0; q < n && !on; ++q) on = v[base + q] > 0.5;
                m.set(r, c, on);
            }
        }
        out.push_back(std::move(m));
    }
    return out;
}

}  // namespace ssp::model
