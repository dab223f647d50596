#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "ssp/error.hpp"
#include "ssp/losses.hpp"
#include "ssp/random.hpp"
#include "support.hpp"

using namespace ssp;
using ad::Tensor;

namespace {

double bce_oracle(const std::vector<double>& p, const std::vector<double>& t) {
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double q = std::clamp(p[i], 1e-7, 1.0 - 1e-7);
        acc += t[i] > 0.5 ? -std::log(q) : -std::log(1.0 - q);
    }
    return acc / static_cast<double>(p.size());
}

double dice_oracle(const std::vector<double>& p, const std::vector<double>& t) {
    double inter = 0, sp = 0, st = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        inter += p[i] * t[i];
        sp += p[i];
        st += t[i];
    }
    return 1.0 - (2.0 * inter + 1.0) / (sp + st + 1.0);
}

double class_oracle(const std::vector<double>& x, const std::vector<double>& y) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double s = 1.0 / (1.0 + std::exp(-x[i]));
        acc += -(y[i] * std::log(s) + (1.0 - y[i]) * std::log(1.0 - s));
    }
    return acc / static_cast<double>(x.size());
}

std::vector<double> to_vec(const BinaryMask& m) { return {m.data().begin(), m.data().end()}; }

}  // namespace

TEST(Losses, BceMatchesOracle) {
    Rng rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = ssp::testing::random_mask(rng, 6, 5);
        auto p = rng.uniform_vector(30, 0.0, 1.0);
        p[0] = 0.0;
        p[1] = 1.0;
        const double got = bce_mask_loss(Tensor::constant({6, 5}, p), m).item();
        EXPECT_NEAR(got, bce_oracle(p, to_vec(m)), 1e-12);
        EXPECT_TRUE(std::isfinite(got));
    }
}

TEST(Losses, DiceMatchesOracleAndBounds) {
    Rng rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = ssp::testing::random_mask(rng, 4, 4, 0.3);
        const auto p = rng.uniform_vector(16, 0.0, 1.0);
        const double got = dice_loss(Tensor::constant({4, 4}, p), m).item();
        EXPECT_NEAR(got, dice_oracle(p, to_vec(m)), 1e-14);
        EXPECT_GE(got, 0.0);
        EXPECT_LT(got, 1.0);
    }
    const auto m = ssp::testing::mask_from_bits(2, 2, 0b0110);
    EXPECT_EQ(dice_loss(mask_tensor(m), m).item(), 0.0);
    EXPECT_EQ(dice_loss(Tensor::zeros({2, 2}), BinaryMask(2, 2)).item(), 0.0);
}

TEST(Losses, ClassBceMatchesOracle) {
    Rng rng(3);
    const auto x = rng.uniform_vector(12, -6.0, 6.0);
    std::vector<double> y(12);
    for (auto& v : y) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
    EXPECT_NEAR(class_bce_loss(Tensor::constant({3, 4}, x), Tensor::constant({3, 4}, y)).item(), class_oracle(x, y),
                1e-12);
    // Large logits stay finite.
    const auto big = class_bce_loss(Tensor::constant({2}, {500.0, -500.0}), Tensor::constant({2}, {0.0, 1.0}));
    EXPECT_DOUBLE_EQ(big.item(), 500.0);
}

TEST(Losses, AvsWorkedValueIsExact) {
    const auto v = avs_loss(Tensor::scalar(0.1), Tensor::scalar(0.2), Tensor::scalar(0.3), LossWeights{});
    EXPECT_EQ(v.item(), 2.1);
}

TEST(Losses, TotalAddsWeightedPost) {
    const LossWeights w;
    const auto avs = Tensor::scalar(2.1);
    EXPECT_EQ(total_loss(avs, Tensor::scalar(0.05), w).item(), 2.1 + 10.0 * 0.05);
    Rng rng(4);
    for (int i = 0; i < 100; ++i) {
        const double a = rng.uniform(0, 10), p = rng.uniform(0, 10);
        LossWeights off;
        off.lambda_mask_prime = 0.0;
        EXPECT_EQ(total_loss(Tensor::scalar(a), Tensor::scalar(p), off).item(), a);
        EXPECT_EQ(total_loss(Tensor::scalar(a), Tensor::scalar(p), w).item(), a + 10.0 * p);
    }
}

TEST(Losses, AvsIsLinearInWeights) {
    LossWeights w{1.5, 0.25, 4.0, 0.0};
    const double got = avs_loss(Tensor::scalar(0.7), Tensor::scalar(0.9), Tensor::scalar(0.4), w).item();
    EXPECT_NEAR(got, 1.5 * 0.7 + 0.25 * 0.9 + 4.0 * 0.4, 1e-15);
}

TEST(Losses, PostMaskIsBceAgainstIntersection) {
    Rng rng(5);
    const auto flow = ssp::testing::random_mask(rng, 5, 5), gt = ssp::testing::random_mask(rng, 5, 5);
    const auto p = Tensor::constant({5, 5}, rng.uniform_vector(25, 0.0, 1.0));
    EXPECT_EQ(post_mask_loss(p, postmask_label(flow, gt)).item(), bce_mask_loss(p, postmask_label(flow, gt)).item());
}

TEST(Losses, Contracts) {
    EXPECT_THROW(bce_mask_loss(Tensor::zeros({2, 2}), BinaryMask(2, 3)), ShapeError);
    EXPECT_THROW(avs_loss(Tensor::zeros({2}), Tensor::scalar(0), Tensor::scalar(0), LossWeights{}), ContractError);
    EXPECT_THROW((LossWeights{-1.0, 5, 2, 10}.validate()), ValueError);
}

TEST(Losses, GradientsPassCheck) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        Rng rng(seed);
        const auto target = mask_tensor(ssp::testing::random_mask(rng, 4, 4));
        const auto labels = Tensor::constant({2, 3}, {1, 0, 0, 0, 1, 1});
        const auto p = Tensor::parameter({4, 4}, rng.uniform_vector(16, 0.05, 0.95));
        EXPECT_LT(ad::grad_check([&](const Tensor& x) { return bce_mask_loss(x, target); }, p), 1e-6);
        EXPECT_LT(ad::grad_check([&](const Tensor& x) { return dice_loss(x, target); }, p), 1e-6);
        const auto z = Tensor::parameter({2, 3}, rng.uniform_vector(6, -3, 3));
        EXPECT_LT(ad::grad_check([&](const Tensor& x) { return class_bce_loss(x, labels); }, z), 1e-6);
    }
}
