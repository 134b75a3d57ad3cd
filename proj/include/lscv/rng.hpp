#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include "lscv/types.hpp"

namespace lscv {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// The 128-bit counter is split into a 64-bit block index (low words) and a
/// 64-bit stream id (high words); the 64-bit key is the user seed. Distinct
/// (key, stream) pairs never share a block, so replication streams do not
/// depend on the order in which workers consume them.
class Philox4x32 {
 public:
  using result_type = std::uint32_t;
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  explicit Philox4x32(std::uint64_t seed = 0, std::uint64_t stream = 0)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  result_type operator()() {
    if (lane_ == 4) {
      buffer_ = bijection(make_counter(block_++), key_);
      lane_ = 0;
    }
    return buffer_[lane_++];
  }

  void discard(std::uint64_t z) {
    while (z-- > 0) (*this)();
  }

  std::uint64_t seed() const { return (static_cast<std::uint64_t>(key_[1]) << 32) | key_[0]; }
  std::uint64_t stream() const { return stream_; }

  friend bool operator==(const Philox4x32& a, const Philox4x32& b) {
    return a.key_ == b.key_ && a.stream_ == b.stream_ && a.block_ == b.block_ && a.lane_ == b.lane_;
  }

  /// The keyed bijection itself, exposed for known-answer tests.
  static Counter bijection(Counter ctr, Key key) {
    constexpr std::uint32_t kM0 = 0xD2511F53u;
    constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    constexpr std::uint32_t kW0 = 0x9E3779B9u;
    constexpr std::uint32_t kW1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
      key[0] += kW0;
      key[1] += kW1;
    }
    return ctr;
  }

 private:
  Counter make_counter(std::uint64_t block) const {
    return {static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
            static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
  }

  Key key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  Counter buffer_{};
  int lane_ = 4;
};

/// Identifies one random stream: the user seed plus a stream index.
struct StreamSeed {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  Philox4x32 engine() const { return Philox4x32(seed, stream); }
  friend bool operator==(const StreamSeed&, const StreamSeed&) = default;
};

/// Maps (base seed, replication index) to an independent stream.
struct SeedPolicy {
  std::uint64_t base_seed = 0;

  // Stream 0 is reserved for single-series commands; replications start at 1.
  StreamSeed derive(std::uint64_t replication) const { return {base_seed, replication + 1}; }
};

enum class Innovation { Gaussian, Uniform, Exponential, Pareto };

inline std::string to_string(Innovation e) {
  switch (e) {
    case Innovation::Gaussian: return "gaussian";
    case Innovation::Uniform: return "uniform";
    case Innovation::Exponential: return "exponential";
    case Innovation::Pareto: return "pareto";
  }
  return "unknown";
}

inline Innovation parse_innovation(const std::string& s) {
  if (s == "gaussian") return Innovation::Gaussian;
  if (s == "uniform") return Innovation::Uniform;
  if (s == "exponential") return Innovation::Exponential;
  if (s == "pareto") return Innovation::Pareto;
  throw ConfigError("innovation: unknown distribution '" + s + "'");
}

/// Pareto shape used by the robustness runs.
inline constexpr double kParetoShape = 2.5;

/// Third and fourth moments of the standardized innovation. Pareto(2.5) has
/// no fourth moment; both are reported as +inf.
struct InnovationMoments {
  double m3;
  double m4;
};

inline InnovationMoments innovation_moments(Innovation e) {
  switch (e) {
    case Innovation::Gaussian: return {0.0, 3.0};
    case Innovation::Uniform: return {0.0, 9.0 / 5.0};
    case Innovation::Exponential: return {2.0, 9.0};
    case Innovation::Pareto:
      return {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  }
  return {0.0, 3.0};
}

/// Draws innovations with mean 0 and (except Pareto) variance 1.
class InnovationSampler {
 public:
  explicit InnovationSampler(Innovation kind) : kind_(kind) {}

  template <class Engine>
  double operator()(Engine& eng) {
    switch (kind_) {
      case Innovation::Gaussian: return normal_(eng);
      case Innovation::Uniform: return std::sqrt(3.0) * (2.0 * uniform_(eng) - 1.0);
      case Innovation::Exponential: return exponential_(eng) - 1.0;
      case Innovation::Pareto: {
        // Inverse CDF with x_m = 1; U is bounded away from 0 so draws stay finite.
        const double u = std::max(1.0 - uniform_(eng), 0x1p-53);
        return std::pow(u, -1.0 / kParetoShape) - kParetoShape / (kParetoShape - 1.0);
      }
    }
    return 0.0;
  }

  Innovation kind() const { return kind_; }

 private:
  Innovation kind_;
  boost::random::normal_distribution<double> normal_{0.0, 1.0};
  boost::random::uniform_01<double> uniform_;
  boost::random::exponential_distribution<double> exponential_{1.0};
};

}  // namespace lscv
