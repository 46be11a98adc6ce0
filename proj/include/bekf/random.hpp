#pragma once

#include <array>
#include <cstdint>

#include <Eigen/Dense>

namespace bekf {

/// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key);

/// Counter-based stream. Key = 64-bit seed; counter = (block lo, block hi,
/// substream a, substream b). Distinct (seed, a, b) triples never share blocks,
/// so a stream's output does not depend on how many other streams exist or
/// which thread consumes them.
class PhiloxStream {
 public:
  PhiloxStream(std::uint64_t seed, std::uint32_t substream_a, std::uint32_t substream_b);

  std::uint32_t next_u32();
  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  /// Standard normal via Box-Muller; pairs are consumed in order.
  double normal();
  Eigen::VectorXd normal_vector(Eigen::Index n);

  std::uint64_t seed() const { return static_cast<std::uint64_t>(key_[0]) | (static_cast<std::uint64_t>(key_[1]) << 32); }
  std::uint32_t substream_a() const { return sub_a_; }
  std::uint32_t substream_b() const { return sub_b_; }

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint64_t block_ = 0;
  std::uint32_t sub_a_;
  std::uint32_t sub_b_;
  std::array<std::uint32_t, 4> buf_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace bekf
