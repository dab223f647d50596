#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ssp {

/// Row-major {0,1} pixel grid. Houses flow masks, ground truth and post-mask labels.
class BinaryMask {
public:
    BinaryMask() = default;
    BinaryMask(std::size_t height, std::size_t width);
    /// Throws ValueError unless every value is 0 or 1, ShapeError on a length mismatch.
    BinaryMask(std::size_t height, std::size_t width, std::vector<std::uint8_t> data);

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    std::size_t size() const { return data_.size(); }

    std::uint8_t at(std::size_t row, std::size_t col) const { return data_[row * width_ + col]; }
    void set(std::size_t row, std::size_t col, bool on) { data_[row * width_ + col] = on ? 1 : 0; }
    std::uint8_t operator[](std::size_t i) const { return data_[i]; }

    std::span<const std::uint8_t> data() const { return data_; }
    std::size_t count() const;

    bool operator==(const BinaryMask&) const = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<std::uint8_t> data_;
};

/// Row-major grid over {0, 0.5, 1}: background, uncertain, agreed foreground.
class TriMask {
public:
    TriMask() = default;
    TriMask(std::size_t height, std::size_t width);
    TriMask(std::size_t height, std::size_t width, std::vector<double> data);

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    std::size_t size() const { return data_.size(); }

    double at(std::size_t row, std::size_t col) const { return data_[row * width_ + col]; }
    double operator[](std::size_t i) const { return data_[i]; }
    std::span<const double> data() const { return data_; }

    bool operator==(const TriMask&) const = default;

    static bool is_level(double v) { return v == 0.0 || v == 0.5 || v == 1.0; }

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<double> data_;
};

/// Single-channel intensities in [0,1].
class GrayFrame {
public:
    GrayFrame() = default;
    GrayFrame(std::size_t height, std::size_t width);
    GrayFrame(std::size_t height, std::size_t width, std::vector<double> data);

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    std::size_t size() const { return data_.size(); }

    double at(std::size_t row, std::size_t col) const { return data_[row * width_ + col]; }
    double operator[](std::size_t i) const { return data_[i]; }
    std::span<const double> data() const { return data_; }

    bool operator==(const GrayFrame&) const = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<double> data_;
};

/// Interleaved (row, col, channel) intensities in [0,1]; 1 or 3 channels.
class ImageFrame {
public:
    ImageFrame() = default;
    ImageFrame(std::size_t height, std::size_t width, std::size_t channels);
    ImageFrame(std::size_t height, std::size_t width, std::size_t channels, std::vector<double> data);

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    std::size_t channels() const { return channels_; }
    std::size_t size() const { return data_.size(); }

    double at(std::size_t row, std::size_t col, std::size_t ch) const {
        return data_[(row * width_ + col) * channels_ + ch];
    }
    double operator[](std::size_t i) const { return data_[i]; }
    std::span<const double> data() const { return data_; }

    /// Channel mean at one pixel.
    double luma(std::size_t row, std::size_t col) const;

    bool operator==(const ImageFrame&) const = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::size_t channels_ = 0;
    std::vector<double> data_;
};

struct MaskStats {
    std::size_t count_one = 0;
    std::size_t count_half = 0;
    std::size_t count_zero = 0;

    bool operator==(const MaskStats&) const = default;
};

/// Default binarization threshold (fraction of the [0,1] intensity range).
inline constexpr double kDefaultTau = 0.05;

/// Pixel is 1 iff its intensity is strictly greater than `tau`.
BinaryMask binarize(const GrayFrame& gray, double tau = kDefaultTau);

/// Tri-valued pre-mask: 1 where both masks are set, 0.5 where exactly one is, 0 elsewhere.
TriMask premask(const BinaryMask& flow_mask, const BinaryMask& gt);

/// Test-time pre-mask: ground truth is unavailable, so every flow pixel is uncertain (0.5)
/// and nothing reaches full agreement.
TriMask inference_premask(const BinaryMask& flow_mask);

/// Post-mask label: pixelwise AND of the flow mask and ground truth.
BinaryMask postmask_label(const BinaryMask& flow_mask, const BinaryMask& gt);

/// Multiplies every channel of each pixel by the mask value at that pixel.
ImageFrame apply_premask(const ImageFrame& frame, const TriMask& mask);

MaskStats mask_stats(const TriMask& mask);

}  // namespace ssp
