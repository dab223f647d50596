#include "ssp/grid.hpp"

#include <algorithm>
#include <string>

#include "ssp/error.hpp"

namespace ssp {

namespace {

void check_length(std::size_t height, std::size_t width, std::size_t channels, std::size_t length,
                  const char* what) {
    if (height * width * channels != length) {
        throw ShapeError(std::string(what) + ": " + std::to_string(height) + "x" + std::to_string(width) +
                         "x" + std::to_string(channels) + " does not match data length " +
                         std::to_string(length));
    }
}

void check_unit_range(std::span<const double> data, const char* what) {
    for (double v : data) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw ValueError(std::string(what) + ": intensity " + std::to_string(v) + " outside [0,1]");
        }
    }
}

template <typename A, typename B>
void check_same_dims(const A& a, const B& b, const char* what) {
    if (a.height() != b.height() || a.width() != b.width()) {
        throw ShapeError(std::string(what) + ": " + std::to_string(a.height()) + "x" +
                         std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
                         std::to_string(b.width()));
    }
}

}  // namespace

BinaryMask::BinaryMask(std::size_t height, std::size_t width)
    : height_(height), width_(width), data_(height * width, 0) {}

BinaryMask::BinaryMask(std::size_t height, std::size_t width, std::vector<std::uint8_t> data)
    : height_(height), width_(width), data_(std::move(data)) {
    check_length(height_, width_, 1, data_.size(), "BinaryMask");
    for (auto v : data_) {
        if (v > 1) throw ValueError("BinaryMask: value " + std::to_string(v) + " is not 0 or 1");
    }
}

std::size_t BinaryMask::count() const {
    return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

TriMask::TriMask(std::size_t height, std::size_t width)
    : height_(height), width_(width), data_(height * width, 0.0) {}

TriMask::TriMask(std::size_t height, std::size_t width, std::vector<double> data)
    : height_(height), width_(width), data_(std::move(data)) {
    check_length(height_, width_, 1, data_.size(), "TriMask");
    for (double v : data_) {
        if (!is_level(v)) throw ValueError("TriMask: value " + std::to_string(v) + " not in {0, 0.5, 1}");
    }
}

GrayFrame::GrayFrame(std::size_t height, std::size_t width)
    : height_(height), width_(width), data_(height * width, 0.0) {}

GrayFrame::GrayFrame(std::size_t height, std::size_t width, std::vector<double> data)
    : height_(height), width_(width), data_(std::move(data)) {
    check_length(height_, width_, 1, data_.size(), "GrayFrame");
    check_unit_range(data_, "GrayFrame");
}

ImageFrame::ImageFrame(std::size_t height, std::size_t width, std::size_t channels)
    : height_(height), width_(width), channels_(channels), data_(height * width * channels, 0.0) {
    if (channels != 1 && channels != 3) throw ValueError("ImageFrame: channels must be 1 or 3");
}

ImageFrame::ImageFrame(std::size_t height, std::size_t width, std::size_t channels, std::vector<double> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
    if (channels != 1 && channels != 3) throw ValueError("ImageFrame: channels must be 1 or 3");
    check_length(height_, width_, channels_, data_.size(), "ImageFrame");
    check_unit_range(data_, "ImageFrame");
}

double ImageFrame::luma(std::size_t row, std::size_t col) const {
    const std::size_t base = (row * width_ + col) * channels_;
    double acc = 0.0;
    for (std::size_t c = 0; c < channels_; ++c) acc += data_[base + c];
    return acc / static_cast<double>(channels_);
}

BinaryMask binarize(const GrayFrame& gray, double tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw ValueError("binarize: tau must lie in [0,1]");
    std::vector<std::uint8_t> out(gray.size());
    std::transform(gray.data().begin(), gray.data().end(), out.begin(),
                   [tau](double v) { return static_cast<std::uint8_t>(v > tau ? 1 : 0); });
    return BinaryMask(gray.height(), gray.width(), std::move(out));
}

TriMask premask(const BinaryMask& flow_mask, const BinaryMask& gt) {
    check_same_dims(flow_mask, gt, "premask");
    std::vector<double> out(gt.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = 0.5 * static_cast<double>(flow_mask[i] + gt[i]);
    }
    return TriMask(gt.height(), gt.width(), std::move(out));
}

TriMask inference_premask(const BinaryMask& flow_mask) {
    std::vector<double> out(flow_mask.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = flow_mask[i] ? 0.5 : 0.0;
    return TriMask(flow_mask.height(), flow_mask.width(), std::move(out));
}

BinaryMask postmask_label(const BinaryMask& flow_mask, const BinaryMask& gt) {
    check_same_dims(flow_mask, gt, "postmask_label");
    std::vector<std::uint8_t> out(gt.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = flow_mask[i] & gt[i];
    return BinaryMask(gt.height(), gt.width(), std::move(out));
}

ImageFrame apply_premask(const ImageFrame& frame, const TriMask& mask) {
    check_same_dims(frame, mask, "apply_premask");
    const std::size_t ch = frame.channels();
    std::vector<double> out(frame.size());
    for (std::size_t p = 0; p < mask.size(); ++p) {
        for (std::size_t c = 0; c < ch; ++c) out[p * ch + c] = frame[p * ch + c] * mask[p];
    }
    return ImageFrame(frame.height(), frame.width(), ch, std::move(out));
}

MaskStats mask_stats(const TriMask& mask) {
    MaskStats s;
    for (double v : mask.data()) {
        if (v == 1.0)
            ++s.count_one;
        else if (v == 0.5)
            ++s.count_half;
        else
            ++s.count_zero;
    }
    return s;
}

}  // namespace ssp
