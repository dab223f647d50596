#include <gtest/gtest.h>

#include <cmath>

#include "ssp/error.hpp"
#include "ssp/flow.hpp"
#include "support.hpp"

using namespace ssp;

namespace {

FlowSequence random_flows(Rng& rng, std::size_t n, std::size_t h, std::size_t w) {
    std::vector<FlowField> f;
    for (std::size_t i = 0; i < n; ++i) f.emplace_back(h, w, rng.uniform_vector(h * w, 0.0, 1.0));
    return FlowSequence(std::move(f));
}

}  // namespace

TEST(TemporalAlign, LengthEndpointsAndMeans) {
    Rng rng(1);
    for (std::size_t n = 1; n <= 10; ++n) {
        const auto in = random_flows(rng, n, 5, 3);
        const auto out = temporal_align(in);
        ASSERT_EQ(out.size(), n + 1);
        EXPECT_EQ(out[0], in[0]);
        EXPECT_EQ(out[n], in[n - 1]);
        for (std::size_t t = 1; t < n; ++t) {
            for (std::size_t i = 0; i < in[0].size(); ++i) {
                EXPECT_NEAR(out[t][i], 0.5 * (in[t - 1][i] + in[t][i]), 1e-15);
            }
        }
    }
}

TEST(TemporalAlign, CommutesWithScaling) {
    Rng rng(2);
    const auto in = random_flows(rng, 5, 4, 4);
    const double k = 0.37;
    std::vector<FlowField> scaled;
    for (const auto& f : in) {
        std::vector<double> m(f.magnitude().begin(), f.magnitude().end());
        for (auto& v : m) v *= k;
        scaled.emplace_back(4, 4, std::move(m));
    }
    const auto a = temporal_align(FlowSequence(scaled));
    const auto b = temporal_align(in);
    for (std::size_t t = 0; t < a.size(); ++t) {
        for (std::size_t i = 0; i < a[t].size(); ++i) EXPECT_NEAR(a[t][i], k * b[t][i], 1e-15);
    }
}

TEST(FlowSequence, RejectsEmptyAndRagged) {
    EXPECT_THROW(FlowSequence({}), EmptyInputError);
    EXPECT_THROW(FlowSequence({FlowField(2, 2), FlowField(2, 3)}), ShapeError);
    EXPECT_THROW(FlowField(1, 1, {1.5}), ValueError);
}

TEST(FrameDiff, AbsoluteLumaDifference) {
    Rng rng(4);
    std::vector<ImageFrame> frames;
    for (int i = 0; i < 3; ++i) frames.push_back(ssp::testing::random_image(rng, 4, 5, 3));
    const auto flows = frame_diff_flow(frames);
    ASSERT_EQ(flows.size(), 2u);
    for (std::size_t t = 0; t < 2; ++t) {
        for (std::size_t r = 0; r < 4; ++r) {
            for (std::size_t c = 0; c < 5; ++c) {
                double a = 0, b = 0;
                for (std::size_t ch = 0; ch < 3; ++ch) {
                    a += frames[t].at(r, c, ch);
                    b += frames[t + 1].at(r, c, ch);
                }
                EXPECT_NEAR(flows[t][r * 5 + c], std::abs(b - a) / 3.0, 1e-15);
            }
        }
    }
    EXPECT_THROW(frame_diff_flow(std::span(frames.data(), 1)), EmptyInputError);
}

TEST(FrameDiff, StaticClipHasNoMotion) {
    Rng rng(6);
    const auto f = ssp::testing::random_image(rng, 8, 8, 3);
    const std::vector<ImageFrame> frames(4, f);
    for (const auto& m : flow_masks(frames)) EXPECT_EQ(m.count(), 0u);
}

TEST(FlowMasks, OnePerFrameAndMovingSquareDetected) {
    std::vector<ImageFrame> frames;
    for (std::size_t t = 0; t < 3; ++t) {
        std::vector<double> px(16 * 16, 0.0);
        for (std::size_t r = 4; r < 8; ++r) {
            for (std::size_t c = 4 * t; c < 4 * t + 4; ++c) px[r * 16 + c] = 1.0;
        }
        frames.emplace_back(16, 16, 1, std::move(px));
    }
    const auto masks = flow_masks(frames);
    ASSERT_EQ(masks.size(), 3u);
    // Frame 0 sees the first difference: the square's old and new position.
    EXPECT_EQ(masks[0].count(), 32u);
    EXPECT_EQ(masks[0].at(5, 0), 1);
    EXPECT_EQ(masks[0].at(5, 7), 1);
    EXPECT_EQ(masks[0].at(5, 8), 0);
    // Middle frame averages both differences; every touched pixel exceeds tau.
    EXPECT_EQ(masks[1].count(), 48u);
    EXPECT_EQ(masks[2], [&] {
        BinaryMask m(16, 16);
        for (std::size_t r = 4; r < 8; ++r) {
            for (std::size_t c = 4; c < 12; ++c) m.set(r, c, true);
        }
        return m;
    }());
}

TEST(FlowGray, RoundTrip) {
    Rng rng(9);
    const FlowField f(3, 3, rng.uniform_vector(9, 0.0, 1.0));
    EXPECT_EQ(gray_to_flow(flow_to_gray(f)), f);
}
