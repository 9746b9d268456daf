#pragma once

#include <array>
#include <span>
#include <vector>

#include "nilm/common.hpp"

namespace nilm {
namespace dwt {

// Daubechies-7 orthonormal scaling filter (14 taps, extremal phase).
// sum = sqrt(2), unit L2 norm; the matching wavelet filter below has
// 7 vanishing moments. Verified by the invariant tests rather than trusted.
inline constexpr std::array<double, 14> kDb7Scaling = {
    0.077852054085009179,   0.39653931948191731,    0.72913209084623512,
    0.46978228740519312,    -0.14390600392856498,   -0.22403618499387498,
    0.071309219266830265,   0.080612609151083072,   -0.038029936935014414,
    -0.016574541630666881,  0.012550998556099841,   0.00042957797292136652,
    -0.0018016407040474909, 0.00035371379997452025,
};

// g[n] = (-1)^n h[13-n]
std::array<double, 14> db7_wavelet_filter();

enum class Extension {
    symmetric,  // half-point symmetric reflection (production mode)
    periodic,   // circular wrap; makes the transform exactly orthonormal (test mode)
};

// One analysis step: extend, convolve with f, keep every second output.
// Output length is floor((n + 13) / 2) in symmetric mode, ceil(n / 2) in
// periodic mode.
std::vector<double> down_convolve(std::span<const double> x, std::span<const double> f,
                                  Extension ext);

struct Pyramid {
    std::vector<std::vector<double>> details;  // details[l] = level l+1 band
    std::vector<double> approx;                // final approximation band
};

Pyramid wavedec(std::span<const double> x, int levels, Extension ext);

// Level-8 detail band of the db7 cascade (approximations only on the way
// down). For a 3334-sample cycle this band has 25 coefficients.
std::vector<double> db7_level8_detail(std::span<const double> x, Extension ext = Extension::symmetric);

}  // namespace dwt
}  // namespace nilm
