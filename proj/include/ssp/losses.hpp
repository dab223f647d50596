#pragma once

#include "ssp/grid.hpp"
#include "ssp/tensor.hpp"

namespace ssp {

/// Weights of the composite objective. Defaults: mask 5, dice 5, classification 2, post-mask 10.
struct LossWeights {
    double lambda_mask = 5.0;
    double lambda_dice = 5.0;
    double lambda_bce = 2.0;
    double lambda_mask_prime = 10.0;

    /// Throws ValueError if any weight is negative or non-finite.
    void validate() const;
};

inline constexpr double kProbClamp = 1e-7;
inline constexpr double kDiceSmooth = 1.0;

/// Pixel-mean binary cross-entropy of probabilities against a {0,1} target of the same shape.
/// Probabilities are clamped to [1e-7, 1 - 1e-7].
ad::Tensor bce_mask_loss(const ad::Tensor& pred, const ad::Tensor& target);
ad::Tensor bce_mask_loss(const ad::Tensor& pred, const BinaryMask& target);

/// 1 - (2 sum(p t) + 1) / (sum(p) + sum(t) + 1).
ad::Tensor dice_loss(const ad::Tensor& pred, const ad::Tensor& target);
ad::Tensor dice_loss(const ad::Tensor& pred, const BinaryMask& target);

/// Mean sigmoid cross-entropy over every (query, class) entry of N x K logits.
ad::Tensor class_bce_loss(const ad::Tensor& logits, const ad::Tensor& labels);

/// lambda_mask m + lambda_dice d + lambda_bce b.
ad::Tensor avs_loss(const ad::Tensor& mask, const ad::Tensor& dice, const ad::Tensor& bce, const LossWeights& w);

/// Mask BCE against the flow/ground-truth intersection label.
ad::Tensor post_mask_loss(const ad::Tensor& pred, const ad::Tensor& m_post);
ad::Tensor post_mask_loss(const ad::Tensor& pred, const BinaryMask& m_post);

/// avs + lambda_mask_prime * post.
ad::Tensor total_loss(const ad::Tensor& avs, const ad::Tensor& post, const LossWeights& w);

/// Wraps a mask as a constant (H, W) tensor of 0/1 values.
ad::Tensor mask_tensor(const BinaryMask& mask);

}  // namespace ssp
