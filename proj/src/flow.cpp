#include "ssp/flow.hpp"

#include <cmath>
#include <string>

#include "ssp/error.hpp"

namespace ssp {

FlowField::FlowField(std::size_t height, std::size_t width)
    : height_(height), width_(width), magnitude_(height * width, 0.0) {}

FlowField::FlowField(std::size_t height, std::size_t width, std::vector<double> magnitude)
    : height_(height), width_(width), magnitude_(std::move(magnitude)) {
    if (height_ * width_ != magnitude_.size()) throw ShapeError("FlowField: dimensions do not match data length");
    for (double v : magnitude_) {
        if (!(v >= 0.0 && v <= 1.0)) throw ValueError("FlowField: magnitude " + std::to_string(v) + " outside [0,1]");
    }
}

FlowSequence::FlowSequence(std::vector<FlowField> frames) : frames_(std::move(frames)) {
    if (frames_.empty()) throw EmptyInputError("FlowSequence: no frames");
    for (const auto& f : frames_) {
        if (f.height() != frames_.front().height() || f.width() != frames_.front().width()) {
            throw ShapeError("FlowSequence: frames differ in size");
        }
    }
}

FlowSequence temporal_align(const FlowSequence& flows) {
    const std::size_t n = flows.size();
    std::vector<FlowField> out;
    out.reserve(n + 1);
    out.push_back(flows[0]);
    for (std::size_t t = 0; t + 1 < n; ++t) {
        const FlowField& a = flows[t];
        const FlowField& b = flows[t + 1];
        std::vector<double> mean(a.size());
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] = (a[i] + b[i]) / 2.0;
        out.emplace_back(a.height(), a.width(), std::move(mean));
    }
    out.push_back(flows[n - 1]);
    return FlowSequence(std::move(out));
}

GrayFrame flow_to_gray(const FlowField& flow) {
    return GrayFrame(flow.height(), flow.width(), {flow.magnitude().begin(), flow.magnitude().end()});
}

FlowField gray_to_flow(const GrayFrame& gray) {
    return FlowField(gray.height(), gray.width(), {gray.data().begin(), gray.data().end()});
}

FlowSequence frame_diff_flow(std::span<const ImageFrame> frames) {
    if (frames.size() < 2) throw EmptyInputError("frame_diff_flow: need at least 2 frames");
    const std::size_t h = frames[0].height();
    const std::size_t w = frames[0].width();
    for (const auto& f : frames) {
        if (f.height() != h || f.width() != w) throw ShapeError("frame_diff_flow: frames differ in size");
    }
    std::vector<FlowField> out;
    out.reserve(frames.size() - 1);
    for (std::size_t t = 0; t + 1 < frames.size(); ++t) {
        std::vector<double> mag(h * w);
        for (std::size_t r = 0; r < h; ++r) {
            for (std::size_t c = 0; c < w; ++c) {
                mag[r * w + c] = std::abs(frames[t + 1].luma(r, c) - frames[t].luma(r, c));
            }
        }
        out.emplace_back(h, w, std::move(mag));
    }
    return FlowSequence(std::move(out));
}

std::vector<BinaryMask> flow_masks(std::span<const ImageFrame> frames, double tau) {
    const FlowSequence aligned = temporal_align(frame_diff_flow(frames));
    std::vector<BinaryMask> masks;
    masks.reserve(aligned.size());
    for (const auto& f : aligned) masks.push_back(binarize(flow_to_gray(f), tau));
    return masks;
}

}  // namespace ssp
