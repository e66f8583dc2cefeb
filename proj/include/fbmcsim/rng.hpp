#pragma once

#include <complex>
#include <cstdint>

namespace fbmcsim {

// Philox4x32-10 counter-based generator. Streams are keyed by
// (seed, stream, substream) so any trial/purpose pair gets an independent,
// reproducible sequence regardless of thread scheduling.
class Philox {
  public:
    Philox(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t substream = 0);

    using result_type = std::uint32_t;
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return 0xFFFFFFFFu; }
    result_type operator()();

    std::uint64_t next_u64();
    // uniform in [0, 1)
    double uniform();
    // uniform in [lo, hi)
    double uniform(double lo, double hi);
    // standard normal via Box-Muller (implementation-independent)
    double gaussian();
    // CN(0, 1): real and imaginary parts each N(0, 1/2)
    std::complex<double> cgaussian();

  private:
    void refill();

    std::uint32_t key_[2];
    std::uint64_t counter_hi_;
    std::uint64_t counter_lo_ = 0;
    std::uint32_t out_[4];
    int avail_ = 0;
    double cached_gauss_ = 0.0;
    bool have_gauss_ = false;
};

}  // namespace fbmcsim
