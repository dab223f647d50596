#include "ssp/losses.hpp"

#include <cmath>
#include <string>

#include "ssp/error.hpp"

namespace ssp {

using ad::Tensor;

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(what) + ": prediction " + ad::to_string(a.shape()) + " vs target " +
                         ad::to_string(b.shape()));
    }
}

Tensor as_scalar(const Tensor& t, const char* what) {
    if (t.numel() != 1) throw ContractError(std::string(what) + ": expected a scalar loss, got " + ad::to_string(t.shape()));
    return t.rank() == 0 ? t : ad::reshape(t, {});
}

}  // namespace

void LossWeights::validate() const {
    for (double w : {lambda_mask, lambda_dice, lambda_bce, lambda_mask_prime}) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw ValueError("loss weights must be finite and nonnegative");
    }
}

Tensor mask_tensor(const BinaryMask& mask) {
    std::vector<double> v(mask.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = mask[i];
    return Tensor::constant({mask.height(), mask.width()}, std::move(v));
}

Tensor bce_mask_loss(const Tensor& pred, const Tensor& target) {
    check_same_shape(pred, target, "bce_mask_loss");
    const Tensor p = ad::clamp(pred, kProbClamp, 1.0 - kProbClamp);
    // t ln p + (1 - t) ln(1 - p)
    const Tensor one_minus_t = ad::add_scalar(ad::scale(target, -1.0), 1.0);
    const Tensor ll = ad::add(ad::mul(target, ad::log(p)),
                              ad::mul(one_minus_t, ad::log(ad::add_scalar(ad::scale(p, -1.0), 1.0))));
    return ad::scale(ad::mean_all(ll), -1.0);
}

Tensor bce_mask_loss(const Tensor& pred, const BinaryMask& target) { return bce_mask_loss(pred, mask_tensor(target)); }

Tensor dice_loss(const Tensor& pred, const Tensor& target) {
    check_same_shape(pred, target, "dice_loss");
    const Tensor inter = ad::scale(ad::sum(ad::mul(pred, target)), 2.0);
    const Tensor denom = ad::add(ad::sum(pred), ad::sum(target));
    const Tensor ratio = ad::div(ad::add_scalar(inter, kDiceSmooth), ad::add_scalar(denom, kDiceSmooth));
    return ad::add_scalar(ad::scale(ratio, -1.0), 1.0);
}

Tensor dice_loss(const Tensor& pred, const BinaryMask& target) { return dice_loss(pred, mask_tensor(target)); }

Tensor class_bce_loss(const Tensor& logits, const Tensor& labels) {
    check_same_shape(logits, labels, "class_bce_loss");
    // -[y ln s(x) + (1-y) ln(1-s(x))] = softplus(x) - x y
    return ad::mean_all(ad::sub(ad::softplus(logits), ad::mul(logits, labels)));
}

Tensor avs_loss(const Tensor& mask, const Tensor& dice, const Tensor& bce, const LossWeights& w) {
    const Tensor m = ad::scale(as_scalar(mask, "avs_loss"), w.lambda_mask);
    const Tensor d = ad::scale(as_scalar(dice, "avs_loss"), w.lambda_dice);
    const Tensor b = ad::scale(as_scalar(bce, "avs_loss"), w.lambda_bce);
    return ad::add(ad::add(m, d), b);
}

Tensor post_mask_loss(const Tensor& pred, const Tensor& m_post) { return bce_mask_loss(pred, m_post); }

Tensor post_mask_loss(const Tensor& pred, const BinaryMask& m_post) { return bce_mask_loss(pred, mask_tensor(m_post)); }

Tensor total_loss(const Tensor& avs, const Tensor& post, const LossWeights& w) {
    return ad::add(as_scalar(avs, "total_loss"), ad::scale(as_scalar(post, "total_loss"), w.lambda_mask_prime));
}

}  // namespace ssp
