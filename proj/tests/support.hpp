#pragma once

#include <cstdint>
#include <vector>

#include "ssp/grid.hpp"
#include "ssp/random.hpp"

namespace ssp::testing {

inline BinaryMask random_mask(Rng& rng, std::size_t h, std::size_t w, double p = 0.5) {
    std::vector<std::uint8_t> d(h * w);
    for (auto& v : d) v = rng.bernoulli(p) ? 1 : 0;
    return BinaryMask(h, w, std::move(d));
}

/// Mask whose pixel i is bit i of `bits`.
inline BinaryMask mask_from_bits(std::size_t h, std::size_t w, unsigned bits) {
    std::vector<std::uint8_t> d(h * w);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = (bits >> i) & 1u;
    return BinaryMask(h, w, std::move(d));
}

inline ImageFrame random_image(Rng& rng, std::size_t h, std::size_t w, std::size_t c) {
    return ImageFrame(h, w, c, rng.uniform_vector(h * w * c, 0.0, 1.0));
}

}  // namespace ssp::testing
