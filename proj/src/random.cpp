// Copyright Contributors to the tnrf project
// SPDX-License-Identifier: Apache-2.0

#include <tnrf/random.h>

#include <cmath>
#include <stdexcept>

namespace tnrf {

std::uint64_t Rng::uniform_int(std::uint64_t n) {
    if (n == 0)
        throw std::invalid_argument("Rng::uniform_int: empty range");
    const std::uint64_t limit = ~std::uint64_t(0) - (~std::uint64_t(0) % n);
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % n;
}

double Rng::normal() {
    // Box-Muller; one value per call keeps the stream position simple.
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

namespace {

std::int64_t poisson_inversion(Rng &rng, double mean) {
    double p = std::exp(-mean);
    double cdf = p;
    double u = rng.uniform();
    std::int64_t k = 0;
    while (u > cdf) {
        ++k;
        p *= mean / double(k);
        cdf += p;
        if (p == 0)  // cdf rounding stalled just below u
            break;
    }
    return k;
}

// Hormann (1993), "The transformed rejection method for generating Poisson
// random variables".
std::int64_t poisson_ptrs(Rng &rng, double mean) {
    const double slam = std::sqrt(mean);
    const double loglam = std::log(mean);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
        double u = rng.uniform() - 0.5;
        double v = rng.uniform();
        double us = 0.5 - std::abs(u);
        auto k = std::int64_t(std::floor((2.0 * a / us + b) * u + mean + 0.43));
        if (us >= 0.07 && v <= vr)
            return k;
        if (k < 0 || (us < 0.013 && v > us))
            continue;
        if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
            -mean + double(k) * loglam - std::lgamma(double(k) + 1.0))
            return k;
    }
}

}  // namespace

std::int64_t sample_poisson(Rng &rng, double mean) {
    if (!(mean >= 0) || !std::isfinite(mean))
        throw std::invalid_argument("sample_poisson: mean must be finite and >= 0");
    if (mean == 0)
        return 0;
    if (mean < 10)
        return poisson_inversion(rng, mean);
    return poisson_ptrs(rng, mean);
}

}  // namespace tnrf
