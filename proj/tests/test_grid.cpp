#include <gtest/gtest.h>

#include "ssp/error.hpp"
#include "ssp/grid.hpp"
#include "support.hpp"

using namespace ssp;
using ssp::testing::mask_from_bits;
using ssp::testing::random_mask;

namespace {

// Case table written out independently of the library's arithmetic.
double premask_rule(std::uint8_t m_o, std::uint8_t gt) {
    if (m_o && gt) return 1.0;
    if (m_o || gt) return 0.5;
    return 0.0;
}

}  // namespace

TEST(Premask, MatchesCaseRuleOnEveryTwoByTwoPair) {
    for (unsigned a = 0; a < 16; ++a) {
        for (unsigned b = 0; b < 16; ++b) {
            const auto mo = mask_from_bits(2, 2, a), gt = mask_from_bits(2, 2, b);
            const auto pm = premask(mo, gt);
            for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(pm[i], premask_rule(mo[i], gt[i])) << a << "," << b;
        }
    }
}

TEST(Premask, SymmetricAndLevelsOnly) {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const auto a = random_mask(rng, 7, 5), b = random_mask(rng, 7, 5);
        const auto ab = premask(a, b);
        EXPECT_EQ(ab, premask(b, a));
        for (double v : ab.data()) EXPECT_TRUE(TriMask::is_level(v));
        const auto s = mask_stats(ab);
        EXPECT_EQ(s.count_one + s.count_half + s.count_zero, ab.size());
        EXPECT_EQ(s.count_one, postmask_label(a, b).count());
    }
}

TEST(Premask, ShapeMismatchThrows) {
    EXPECT_THROW(premask(BinaryMask(2, 2), BinaryMask(2, 3)), ShapeError);
    EXPECT_THROW(postmask_label(BinaryMask(3, 2), BinaryMask(2, 3)), ShapeError);
}

TEST(Premask, InferenceRuleIsHalfOnFlowOnly) {
    Rng rng(3);
    const auto mo = random_mask(rng, 6, 6);
    const auto pm = inference_premask(mo);
    for (std::size_t i = 0; i < mo.size(); ++i) EXPECT_EQ(pm[i], mo[i] ? 0.5 : 0.0);
    EXPECT_EQ(mask_stats(pm).count_one, 0u);
}

TEST(Postmask, IsPixelwiseAnd) {
    for (unsigned a = 0; a < 16; ++a) {
        for (unsigned b = 0; b < 16; ++b) {
            const auto p = postmask_label(mask_from_bits(2, 2, a), mask_from_bits(2, 2, b));
            EXPECT_EQ(p, mask_from_bits(2, 2, a & b));
        }
    }
}

TEST(Postmask, ZeroFlowGivesEmptyLabel) {
    Rng rng(5);
    const auto gt = random_mask(rng, 8, 8);
    EXPECT_EQ(postmask_label(BinaryMask(8, 8), gt).count(), 0u);
    EXPECT_EQ(postmask_label(gt, gt), gt);
}

TEST(ApplyPremask, ScalesEveryChannel) {
    Rng rng(8);
    const auto img = ssp::testing::random_image(rng, 4, 4, 3);
    const auto pm = premask(random_mask(rng, 4, 4), random_mask(rng, 4, 4));
    const auto out = apply_premask(img, pm);
    for (std::size_t r = 0; r < 4; ++r) {
        for (std::size_t c = 0; c < 4; ++c) {
            for (std::size_t ch = 0; ch < 3; ++ch) EXPECT_EQ(out.at(r, c, ch), img.at(r, c, ch) * pm.at(r, c));
        }
    }
    EXPECT_THROW(apply_premask(img, TriMask(4, 5)), ShapeError);
}

TEST(Binarize, StrictThreshold) {
    const GrayFrame g(1, 4, {0.0, 0.05, 0.0500001, 1.0});
    EXPECT_EQ(binarize(g), BinaryMask(1, 4, {0, 0, 1, 1}));
    EXPECT_EQ(binarize(g, 1.0).count(), 0u);
    EXPECT_EQ(binarize(g, 0.0).count(), 3u);
    EXPECT_THROW(binarize(g, -0.1), ValueError);
}

TEST(Binarize, MonotoneInTau) {
    Rng rng(21);
    const GrayFrame g(9, 9, rng.uniform_vector(81, 0.0, 1.0));
    std::size_t prev = g.size() + 1;
    for (double tau = 0.0; tau <= 1.0; tau += 0.05) {
        const auto n = binarize(g, tau).count();
        EXPECT_LE(n, prev);
        prev = n;
    }
}

TEST(Grids, ConstructorsValidate) {
    EXPECT_THROW(BinaryMask(2, 2, {0, 1, 2, 0}), ValueError);
    EXPECT_THROW(BinaryMask(2, 2, {0, 1, 1}), ShapeError);
    EXPECT_THROW(TriMask(1, 2, {0.25, 1.0}), ValueError);
    EXPECT_THROW(GrayFrame(1, 2, {0.5, 1.5}), ValueError);
    EXPECT_THROW(ImageFrame(1, 1, 2, {0.1, 0.2}), ValueError);
}
