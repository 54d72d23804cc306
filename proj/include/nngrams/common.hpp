#ifndef NNGRAMS_COMMON_HPP
#define NNGRAMS_COMMON_HPP

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace nngrams {

using WordId = std::int32_t;
using IdSeq = std::vector<WordId>;

// Bad arguments, malformed configuration. CLI maps this to exit code 1.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Unreadable or malformed input data. CLI maps this to exit code 2.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// FNV-1a over the id bytes; used for all id-sequence keyed maps.
struct IdSeqHash {
  std::size_t operator()(const IdSeq& seq) const noexcept {
    std::uint64_t h = 14695981039346656037ull;
    for (WordId id : seq) {
      auto u = static_cast<std::uint32_t>(id);
      for (int b = 0; b < 4; ++b) {
        h ^= (u >> (8 * b)) & 0xffu;
        h *= 1099511628211ull;
      }
    }
    return static_cast<std::size_t>(h);
  }
};

// mt19937_64 plus explicit bit-to-double conversion so sample streams are
// byte-identical across standard libraries (std distributions are not
// pinned by the standard).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
  }

  // Index into a cumulative distribution (last entry = total mass).
  std::size_t categorical_cdf(const std::vector<double>& cdf) {
    double u = uniform() * cdf.back();
    std::size_t lo = 0, hi = cdf.size() - 1;
    while (lo < hi) {
      std::size_t mid = (lo + hi) / 2;
      if (cdf[mid] <= u) {
        lo = mid + 1;
      } else {
        hi = mid;
      }
    }
    return lo;
  }

 private:
  std::mt19937_64 eng_;
};

// Writes `content` to `path` via a temp file plus rename, so interrupted
// runs never leave truncated artifacts.
void atomic_write_file(const std::string& path, const std::string& content);

std::vector<std::string> split_ws(const std::string& line);

}  // namespace nngrams

#endif
