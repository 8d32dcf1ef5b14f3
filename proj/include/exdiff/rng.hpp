#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace exdiff {

namespace detail {
/// One Philox4x32 block with 10 rounds.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key);
}  // namespace detail

/// Counter-based random stream (Philox4x32-10).
///
/// A stream is addressed by (seed, stream_id). The seed is the Philox key and
/// the stream id occupies the upper half of the 128-bit counter, so distinct
/// addresses never share a counter block. Copying a stream copies its
/// position; the copy replays the same sequence.
class RngStream {
  public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();

    /// Uniform on the open interval (0, 1).
    double uniform();
    /// Standard normal (Box-Muller, pairs cached).
    double normal();
    /// Standard exponential.
    double exponential();

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

  private:
    void refill();

    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    int buffered_ = 0;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace exdiff
