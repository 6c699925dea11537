#pragma once

// Synthetic two-covariate binary classification generator. Covariate x1 is
// a random-amplitude, random-phase sine over [0, 2*pi] with a high
// frequency bump added on (3*pi/8 - phi, 5*pi/8 - phi); the sign of the
// bump amplitude defines the class. Covariate x2 is an uninformative
// cosine. Fully deterministic given the seed: each sample draws from its
// own counter-derived substream, with Box-Muller normal variates so that
// output does not depend on the platform's library.

#include <cstdint>
#include <numbers>
#include <random>

#include "fdata.hpp"

namespace mucart {

struct SimConfig {
    std::size_t n = 100;
    std::size_t p = 200;
    std::uint64_t seed = 0;

    void validate() const {
        if (n < 2) throw std::invalid_argument("SimConfig: n must be >= 2");
        if (p < 2) throw std::invalid_argument("SimConfig: p must be >= 2");
    }
};

namespace sim_detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Standard normal via Box-Muller, two fresh uniforms per draw.
class NormalStream {
  public:
    explicit NormalStream(std::uint64_t seed) : rng_(seed) {}

    double next() {
        // uniforms in (0, 1]
        const double u1 =
            (static_cast<double>(rng_() >> 11) + 1.0) / 9007199254740993.0;  // 2^53 + 1
        const double u2 = static_cast<double>(rng_() >> 11) / 9007199254740992.0;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

  private:
    std::mt19937_64 rng_;
};

}  // namespace sim_detail

inline FunctionalDataset generate(const SimConfig& cfg) {
    cfg.validate();
    using std::numbers::pi;
    const double sd_phi = pi / 75.0;  // phase spread
    const double sd_alpha = 0.3;      // bump amplitude spread

    Grid grid{0.0, 2.0 * pi, cfg.p};
    FunctionalDataset ds;
    ds.covariates.resize(2);
    ds.covariates[0].name = "x1";
    ds.covariates[1].name = "x2";
    for (auto& cov : ds.covariates) {
        cov.grid = grid;
        cov.n_samples = cfg.n;
        cov.values.resize(cfg.n * cfg.p);
    }
    ds.response.kind = Response::Kind::Categorical;
    ds.response.n_classes = 2;
    ds.response.labels.resize(cfg.n);

    for (std::size_t i = 0; i < cfg.n; ++i) {
        sim_detail::NormalStream normals(
            sim_detail::splitmix64(cfg.seed ^ sim_detail::splitmix64(i)));
        const double b1 = normals.next();
        const double phi1 = sd_phi * normals.next();
        const double alpha = sd_alpha * normals.next();
        const double b2 = normals.next();
        const double phi2 = sd_phi * normals.next();
        ds.response.labels[i] = alpha > 0.0 ? 1 : 0;

        const double bump_lo = 3.0 * pi / 8.0 - phi1;
        const double bump_hi = 5.0 * pi / 8.0 - phi1;
        auto r1 = ds.covariates[0].row(i);
        auto r2 = ds.covariates[1].row(i);
        for (std::size_t j = 0; j < cfg.p; ++j) {
            const double t = grid.point(j);
            double v = b1 + std::sin(t + phi1);
            if (t > bump_lo && t < bump_hi) v += alpha * std::sin(8.0 * (t + phi1));
            r1[j] = v;
            r2[j] = b2 + std::cos(t + phi2);
        }
    }
    return ds;
}

}  // namespace mucart
