#include "fbmcsim/rng.hpp"

#include <cmath>
#include <numbers>

namespace fbmcsim {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

// splitmix64, used to whiten the (seed, stream, substream) triple into keys
inline std::uint64_t splitmix64(std::uint64_t& s) {
    s += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace

Philox::Philox(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream) {
    std::uint64_t s = seed;
    std::uint64_t k = splitmix64(s);
    s ^= stream * 0xC2B2AE3D27D4EB4Full;
    k ^= splitmix64(s);
    key_[0] = static_cast<std::uint32_t>(k);
    key_[1] = static_cast<std::uint32_t>(k >> 32);
    std::uint64_t c = substream + 0x9E3779B97F4A7C15ull * stream;
    counter_hi_ = splitmix64(c);
}

void Philox::refill() {
    std::uint32_t c0 = static_cast<std::uint32_t>(counter_lo_);
    std::uint32_t c1 = static_cast<std::uint32_t>(counter_lo_ >> 32);
    std::uint32_t c2 = static_cast<std::uint32_t>(counter_hi_);
    std::uint32_t c3 = static_cast<std::uint32_t>(counter_hi_ >> 32);
    std::uint32_t k0 = key_[0], k1 = key_[1];
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kPhiloxM0, c0, hi0, lo0);
        mulhilo(kPhiloxM1, c2, hi1, lo1);
        const std::uint32_t n0 = hi1 ^ c1 ^ k0;
        const std::uint32_t n1 = lo1;
        const std::uint32_t n2 = hi0 ^ c3 ^ k1;
        const std::uint32_t n3 = lo0;
        c0 = n0;
        c1 = n1;
        c2 = n2;
        c3 = n3;
        k0 += kPhiloxW0;
        k1 += kPhiloxW1;
    }
    out_[0] = c0;
    out_[1] = c1;
    out_[2] = c2;
    out_[3] = c3;
    avail_ = 4;
    ++counter_lo_;
}

Philox::result_type Philox::operator()() {
    if (avail_ == 0) refill();
    return out_[--avail_];
}

std::uint64_t Philox::next_u64() {
    const std::uint64_t hi = (*this)();
    const std::uint64_t lo = (*this)();
    return (hi << 32) | lo;
}

double Philox::uniform() {
    // 53-bit mantissa
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Philox::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Philox::gaussian() {
    if (have_gauss_) {
        have_gauss_ = false;
        return cached_gauss_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double th = 2.0 * std::numbers::pi * u2;
    cached_gauss_ = r * std::sin(th);
    have_gauss_ = true;
    return r * std::cos(th);
}

std::complex<double> Philox::cgaussian() {
    const double s = std::numbers::sqrt2 / 2.0;
    return {s * gaussian(), s * gaussian()};
}

}  // namespace fbmcsim
