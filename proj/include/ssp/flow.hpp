#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ssp/grid.hpp"

namespace ssp {

/// Scalar motion magnitude per pixel, normalized to [0,1].
class FlowField {
public:
    FlowField() = default;
    FlowField(std::size_t height, std::size_t width);
    FlowField(std::size_t height, std::size_t width, std::vector<double> magnitude);

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    std::size_t size() const { return magnitude_.size(); }
    double operator[](std::size_t i) const { return magnitude_[i]; }
    std::span<const double> magnitude() const { return magnitude_; }

    bool operator==(const FlowField&) const = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<double> magnitude_;
};

/// Ordered, nonempty list of same-sized flow fields.
class FlowSequence {
public:
    explicit FlowSequence(std::vector<FlowField> frames);

    std::size_t size() const { return frames_.size(); }
    const FlowField& operator[](std::size_t i) const { return frames_[i]; }
    const std::vector<FlowField>& frames() const { return frames_; }
    std::size_t height() const { return frames_.front().height(); }
    std::size_t width() const { return frames_.front().width(); }

    auto begin() const { return frames_.begin(); }
    auto end() const { return frames_.end(); }

private:
    std::vector<FlowField> frames_;
};

/// Stretches T-1 inter-frame fields into T per-frame fields:
/// [F1, (F1+F2)/2, ..., (F_{T-2}+F_{T-1})/2, F_{T-1}].
FlowSequence temporal_align(const FlowSequence& flows);

GrayFrame flow_to_gray(const FlowField& flow);
FlowField gray_to_flow(const GrayFrame& gray);

/// Frame-difference stand-in for an optical-flow estimator:
/// field t is |luma(frame t+1) - luma(frame t)| per pixel.
FlowSequence frame_diff_flow(std::span<const ImageFrame> frames);

/// frame_diff_flow -> temporal_align -> flow_to_gray -> binarize, one mask per frame.
std::vector<BinaryMask> flow_masks(std::span<const ImageFrame> frames, double tau = kDefaultTau);

}  // namespace ssp
