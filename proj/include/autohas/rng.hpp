#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace autohas {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t hash = 0xcbf29ce484222325ULL);

// Counter-based pseudo-random stream. Output i of a stream is a pure function
// of (seed, name, i), so draws are reproducible on every platform and do not
// depend on the order in which other streams are consumed.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string name, std::uint64_t counter = 0);

  std::uint64_t next_u64();
  double uniform();  // [0, 1) with 53 bits
  // Uniform integer in [0, n). n must be positive.
  std::size_t below(std::size_t n);
  double normal();
  double gamma(double shape);
  double beta(double a, double b);
  std::vector<std::size_t> permutation(std::size_t n);

  // Independent stream named "<name>/<suffix>", counter reset to zero.
  RngStream child(std::string_view suffix) const;
  RngStream child(std::uint64_t index) const { return child(std::to_string(index)); }

  std::uint64_t seed() const { return seed_; }
  const std::string& name() const { return name_; }
  std::uint64_t counter() const { return counter_; }
  void set_counter(std::uint64_t counter) { counter_ = counter; }

 private:
  std::uint64_t seed_;
  std::string name_;
  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace autohas
