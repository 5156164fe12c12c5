#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace smolkit {

/// Philox4x32-10 counter-based generator. The key is derived from the run seed and the counter
/// from (stream id, block index), so every stream is an independent, reproducible substream
/// regardless of which worker draws it.
class Philox4x32 {
  public:
    using result_type = std::uint32_t;
    using Block = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    Philox4x32(std::uint64_t seed, std::uint64_t stream);

    /// Raw block function (exposed for known-answer tests).
    static Block bijection(Block counter, Key key);

    result_type operator()();
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    /// Uniform on the open interval (0, 1) with 53 random bits.
    double uniform();
    /// Standard normal (Box-Muller, second variate cached).
    double normal();
    /// Exponential with the given rate (> 0).
    double exponential(double rate);

  private:
    void refill();

    Key key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    Block buffer_{};
    int used_ = 4;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace smolkit
