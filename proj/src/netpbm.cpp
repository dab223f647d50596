#include "ssp/netpbm.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "ssp/error.hpp"

namespace ssp::netpbm {

namespace {

constexpr int kMaxval = 255;

struct RawImage {
    int channels = 1;
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<int> values;
};

// Next whitespace-delimited token, skipping '#' comments to end of line.
bool next_token(std::istream& in, std::string& token) {
    token.clear();
    char c = 0;
    while (in.get(c)) {
        if (c == '#') {
            std::string rest;
            std::getline(in, rest);
            if (!token.empty()) return true;
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!token.empty()) return true;
            continue;
        }
        token.push_back(c);
    }
    return !token.empty();
}

long parse_int(std::istream& in, const char* what) {
    std::string tok;
    if (!next_token(in, tok)) throw FormatError(std::string("netpbm: missing ") + what);
    std::size_t used = 0;
    long v = 0;
    try {
        v = std::stol(tok, &used);
    } catch (const std::exception&) {
        throw FormatError(std::string("netpbm: bad ") + what + " '" + tok + "'");
    }
    if (used != tok.size()) throw FormatError(std::string("netpbm: bad ") + what + " '" + tok + "'");
    return v;
}

RawImage parse_raw(std::istream& in) {
    std::string magic;
    if (!next_token(in, magic)) throw FormatError("netpbm: empty input");
    RawImage img;
    if (magic == "P2") {
        img.channels = 1;
    } else if (magic == "P3") {
        img.channels = 3;
    } else {
        throw FormatError("netpbm: unsupported magic '" + magic + "' (expected P2 or P3)");
    }
    const long w = parse_int(in, "width");
    const long h = parse_int(in, "height");
    if (w <= 0 || h <= 0) throw FormatError("netpbm: dimensions must be positive");
    const long maxval = parse_int(in, "maxval");
    if (maxval != kMaxval) throw FormatError("netpbm: maxval must be 255, got " + std::to_string(maxval));
    img.width = static_cast<std::size_t>(w);
    img.height = static_cast<std::size_t>(h);
    const std::size_t n = img.width * img.height * static_cast<std::size_t>(img.channels);
    img.values.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const long v = parse_int(in, "pixel");
        if (v < 0 || v > kMaxval) throw FormatError("netpbm: pixel " + std::to_string(v) + " outside 0..255");
        img.values.push_back(static_cast<int>(v));
    }
    std::string extra;
    if (next_token(in, extra)) throw FormatError("netpbm: trailing data after pixels");
    return img;
}

RawImage parse_gray_raw(std::istream& in, const char* what) {
    RawImage raw = parse_raw(in);
    if (raw.channels != 1) throw FormatError(std::string(what) + ": expected a P2 graymap");
    return raw;
}

void write_raw(std::ostream& out, int channels, std::size_t width, std::size_t height,
               const std::vector<int>& values) {
    out << (channels == 1 ? "P2" : "P3") << '\n' << width << ' ' << height << '\n' << kMaxval << '\n';
    const std::size_t row_len = width * static_cast<std::size_t>(channels);
    for (std::size_t r = 0; r < height; ++r) {
        for (std::size_t i = 0; i < row_len; ++i) {
            if (i) out << ' ';
            out << values[r * row_len + i];
        }
        out << '\n';
    }
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    return in;
}

template <typename T>
void write_file(const std::filesystem::path& path, const T& value) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    format(out, value);
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace

int encode_level(double value) { return static_cast<int>(std::lround(value * kMaxval)); }

BinaryMask parse_binary_mask(std::istream& in) {
    RawImage raw = parse_gray_raw(in, "binary mask");
    std::vector<std::uint8_t> data(raw.values.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const int v = raw.values[i];
        if (v != 0 && v != kMaxval) throw FormatError("binary mask: pixel " + std::to_string(v) + " not in {0,255}");
        data[i] = v == kMaxval ? 1 : 0;
    }
    return BinaryMask(raw.height, raw.width, std::move(data));
}

TriMask parse_trimask(std::istream& in) {
    RawImage raw = parse_gray_raw(in, "tri-mask");
    std::vector<double> data(raw.values.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        switch (raw.values[i]) {
            case 0: data[i] = 0.0; break;
            case 128: data[i] = 0.5; break;
            case kMaxval: data[i] = 1.0; break;
            default:
                throw FormatError("tri-mask: pixel " + std::to_string(raw.values[i]) + " not in {0,128,255}");
        }
    }
    return TriMask(raw.height, raw.width, std::move(data));
}

GrayFrame parse_gray(std::istream& in) {
    RawImage raw = parse_gray_raw(in, "graymap");
    std::vector<double> data(raw.values.size());
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = raw.values[i] / static_cast<double>(kMaxval);
    return GrayFrame(raw.height, raw.width, std::move(data));
}

ImageFrame parse_image(std::istream& in) {
    RawImage raw = parse_raw(in);
    std::vector<double> data(raw.values.size());
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = raw.values[i] / static_cast<double>(kMaxval);
    return ImageFrame(raw.height, raw.width, static_cast<std::size_t>(raw.channels), std::move(data));
}

void format(std::ostream& out, const BinaryMask& mask) {
    std::vector<int> values(mask.size());
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = mask[i] ? kMaxval : 0;
    write_raw(out, 1, mask.width(), mask.height(), values);
}

void format(std::ostream& out, const TriMask& mask) {
    std::vector<int> values(mask.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] = mask[i] == 1.0 ? kMaxval : (mask[i] == 0.5 ? 128 : 0);
    }
    write_raw(out, 1, mask.width(), mask.height(), values);
}

void format(std::ostream& out, const GrayFrame& frame) {
    std::vector<int> values(frame.size());
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = encode_level(frame[i]);
    write_raw(out, 1, frame.width(), frame.height(), values);
}

void format(std::ostream& out, const ImageFrame& frame) {
    std::vector<int> values(frame.size());
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = encode_level(frame[i]);
    write_raw(out, static_cast<int>(frame.channels()), frame.width(), frame.height(), values);
}

BinaryMask read_binary_mask(const std::filesystem::path& path) {
    auto in = open_in(path);
    return parse_binary_mask(in);
}

TriMask read_trimask(const std::filesystem::path& path) {
    auto in = open_in(path);
    return parse_trimask(in);
}

GrayFrame read_gray(const std::filesystem::path& path) {
    auto in = open_in(path);
    return parse_gray(in);
}

ImageFrame read_image(const std::filesystem::path& path) {
    auto in = open_in(path);
    return parse_image(in);
}

void write(const std::filesystem::path& path, const BinaryMask& mask) { write_file(path, mask); }
void write(const std::filesystem::path& path, const TriMask& mask) { write_file(path, mask); }
void write(const std::filesystem::path& path, const GrayFrame& frame) { write_file(path, frame); }
void write(const std::filesystem::path& path, const ImageFrame& frame) { write_file(path, frame); }

}  // namespace ssp::netpbm
