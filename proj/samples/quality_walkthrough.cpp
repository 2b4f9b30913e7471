// Walks a synthetic image down the JPEG quality scale and prints, per level,
// the bit budget left, the reconstruction PSNR and the coefficient entropy,
// then the content/noise split a knee at each quality would imply.

#include <cmath>
#include <cstdio>

#include "pn/bit_budget.hpp"
#include "pn/helmholtz.hpp"
#include "pn/image_codec.hpp"

int main() {
    pn::codec::ImageRGB img(64, 64);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const double s = 128 + 60 * std::sin(x * 0.21) * std::cos(y * 0.17) + 8 * std::sin(x * 1.3 + y * 0.7);
            img.at(x, y, 0) = static_cast<std::uint8_t>(std::clamp(s + 20, 0.0, 255.0));
            img.at(x, y, 1) = static_cast<std::uint8_t>(std::clamp(s, 0.0, 255.0));
            img.at(x, y, 2) = static_cast<std::uint8_t>(std::clamp(255 - s, 0.0, 255.0));
        }

    std::printf("quality  bits_lost  bits_left  psnr_db  coeff_entropy  content_bits  noise_bits\n");
    for (int q : {100, 95, 80, 50, 25, 19, 10, 5, 1}) {
        const auto r = pn::codec::transcode_image(img, q);
        const auto split = pn::helmholtz::noise_bits_estimate(q);
        std::printf("%7d  %9.3f  %9.3f  %7.2f  %13.3f  %12.3f  %10.3f\n", q, pn::budget::bits_lost(q),
                    pn::budget::bits_remaining(q), r.stats.psnr, r.stats.coefficient_entropy, split.content_bits,
                    split.noise_bits);
    }
    std::printf("quality for 1 bit/pixel left: %d\n", pn::budget::quality_for_bits(1.0));
    return 0;
}
