#pragma once

#include <complex>
#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

namespace mmimo {

// splitmix64, used to derive well-mixed seeds and sub-stream keys.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Derive a sub-stream seed from a parent seed and up to three indices.
// Used everywhere a reproducible independent stream is needed (per sweep
// point, per drop, per realization).
inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = parent;
    std::uint64_t h = splitmix64(s);
    s ^= a + 0x632be59bd9b4e019ULL;
    h ^= splitmix64(s);
    s ^= b + 0x9e6c63d0876a9a47ULL;
    h ^= splitmix64(s);
    s ^= c + 0xd1b54a32d192ed03ULL;
    h ^= splitmix64(s);
    return h;
}

// xoshiro256++ by Blackman & Vigna (public domain reference implementation).
// Small, fast and with a fully specified bit-exact sequence, which the
// reproducibility contract relies on.
class Xoshiro256pp {
public:
    using result_type = std::uint64_t;

    explicit Xoshiro256pp(std::uint64_t seed = 0x853c49e6748fea9bULL) {
        std::uint64_t sm = seed;
        for (auto& w : state_) w = splitmix64(sm);
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    result_type operator()() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform on (0, 1]; never returns 0 so log() stays finite.
    double uniform_pos() { return (double((*this)() >> 11) + 1.0) * 0x1.0p-53; }

    // Uniform on [lo, hi).
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * (double((*this)() >> 11) * 0x1.0p-53);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t state_[4];
};

// Standard normal pairs via Box-Muller. The two-at-a-time structure is part
// of the reproducibility contract, so draws are always consumed in pairs.
class NormalSource {
public:
    explicit NormalSource(Xoshiro256pp& rng) : rng_(rng) {}

    void pair(double& a, double& b) {
        const double r = std::sqrt(-2.0 * std::log(rng_.uniform_pos()));
        const double t = 6.283185307179586476925286766559 * rng_.uniform_pos();
        a = r * std::cos(t);
        b = r * std::sin(t);
    }

    // One CN(0, var) sample: real and imaginary parts each N(0, var/2).
    std::complex<double> complex_normal(double var) {
        double a, b;
        pair(a, b);
        const double s = std::sqrt(var * 0.5);
        return {s * a, s * b};
    }

private:
    Xoshiro256pp& rng_;
};

// Fills a column with CN(0, var) entries via the Marsaglia polar method:
// one accepted point (v1, v2) in the unit disc gives the complex sample
// (v1 + i v2) * sqrt(-var * log(m) / m) with m = v1^2 + v2^2. The rejection
// loop uses only multiplies; the log/sqrt factor is vectorized in a batch.
inline void fill_complex_normal(Xoshiro256pp& rng, double var,
                                Eigen::Ref<Eigen::VectorXcd> out) {
    const Eigen::Index n = out.size();
    if (n == 0) return;
    thread_local Eigen::ArrayXd m, v1, v2;
    m.resize(n);
    v1.resize(n);
    v2.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double a, b, mm;
        do {
            a = rng.uniform(-1.0, 1.0);
            b = rng.uniform(-1.0, 1.0);
            mm = a * a + b * b;
        } while (mm >= 1.0 || mm == 0.0);
        v1[i] = a;
        v2[i] = b;
        m[i] = mm;
    }
    m = (m.log() * (-var) / m).sqrt();
    out.real() = (v1 * m).matrix();
    out.imag() = (v2 * m).matrix();
}

}  // namespace mmimo
