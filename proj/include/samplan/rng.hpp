#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace samplan {

// Counter-based RNG (Philox4x32-10). Every random quantity in the project is
// drawn from a stream keyed by (key, stream-id) where the stream id packs a
// sequence number and a role, so results never depend on execution order or
// thread count. Draws can also be addressed directly by index (uniform_at),
// which keeps row-parallel loops deterministic.

enum class Role : std::uint64_t {
  split = 0,         // target-population / development-pool split
  pop_outcomes = 1,  // outcome realisation of a target population
  model_select = 2,  // mixture reference-model choice per iteration
  sample = 3,        // development-sample row selection
  outcomes = 4,      // development-sample outcome draws
  fit = 5,           // anything stochastic inside a fit (CV folds, bootstrap)
  mcmc = 6,          // Metropolis-Hastings chains
  dev_surrogate = 7, // surrogate development samples in the fisher path
  calibration = 8,   // fixed outcome realisation used by calibrate_reference
  synthesis = 9,     // case-mix synthesis
  tree = 10,         // per-tree bootstrap/column streams
};

namespace detail {

struct PhiloxBlock {
  std::uint32_t v[4];
};

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline PhiloxBlock philox4x32(std::uint64_t key, std::uint64_t stream, std::uint64_t counter) {
  std::uint32_t c0 = static_cast<std::uint32_t>(counter);
  std::uint32_t c1 = static_cast<std::uint32_t>(counter >> 32);
  std::uint32_t c2 = static_cast<std::uint32_t>(stream);
  std::uint32_t c3 = static_cast<std::uint32_t>(stream >> 32);
  std::uint32_t k0 = static_cast<std::uint32_t>(key);
  std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(0xD2511F53u, c0, hi0, lo0);
    mulhilo(0xCD9E8D57u, c2, hi1, lo1);
    std::uint32_t n0 = hi1 ^ c1 ^ k0;
    std::uint32_t n1 = lo1;
    std::uint32_t n2 = hi0 ^ c3 ^ k1;
    std::uint32_t n3 = lo0;
    c0 = n0;
    c1 = n1;
    c2 = n2;
    c3 = n3;
    k0 += 0x9E3779B9u;
    k1 += 0xBB67AE85u;
  }
  return PhiloxBlock{{c0, c1, c2, c3}};
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace detail

// Mixes two 64-bit values into a new key; used to fold (master_seed,
// iteration) into the per-iteration key of a stream.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return detail::splitmix64(a ^ detail::splitmix64(b + 0x632BE59BD9B4E019ull));
}

class RngStream {
 public:
  RngStream(std::uint64_t key, std::uint64_t sequence, Role role)
      : key_(key), stream_((sequence << 6) | static_cast<std::uint64_t>(role)) {}

  // Sequential draws -------------------------------------------------------

  std::uint64_t next_u64() {
    if (have_buffered_) {
      have_buffered_ = false;
      return buffered_;
    }
    auto b = detail::philox4x32(key_, stream_, counter_++);
    buffered_ = (static_cast<std::uint64_t>(b.v[2]) << 32) | b.v[3];
    have_buffered_ = true;
    return (static_cast<std::uint64_t>(b.v[0]) << 32) | b.v[1];
  }

  // Uniform on [0,1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0,1]; safe under log().
  double uniform_pos() { return 1.0 - uniform(); }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u = uniform_pos();
    double v = uniform();
    double r = std::sqrt(-2.0 * std::log(u));
    double theta = 6.283185307179586476925286766559 * v;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Integer in [0, n), unbiased (rejection on the top range).
  std::uint64_t below(std::uint64_t n) {
    std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // Indexed draws: draw #i of this stream, independent of any sequential use.
  // Indexed and sequential draws share the counter space only if sequential
  // use exceeds 2^63 blocks, which never happens here (indexed draws live in
  // the upper half).
  double uniform_at(std::uint64_t i) const {
    auto b = detail::philox4x32(key_, stream_, (1ull << 63) | i);
    std::uint64_t r = (static_cast<std::uint64_t>(b.v[0]) << 32) | b.v[1];
    return static_cast<double>(r >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t key_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::uint64_t buffered_ = 0;
  bool have_buffered_ = false;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

inline RngStream make_stream(std::uint64_t key, std::uint64_t sequence, Role role) {
  return RngStream(key, sequence, role);
}

}  // namespace samplan
