#include "autohas/rng.hpp"

#include <cmath>
#include <numbers>

#include "autohas/error.hpp"

namespace autohas {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t hash) {
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

RngStream::RngStream(std::uint64_t seed, std::string name, std::uint64_t counter)
    : seed_(seed),
      name_(std::move(name)),
      key_(mix64(mix64(seed + kGolden) ^ fnv1a64(name_))),
      counter_(counter) {}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t c = counter_++;
  return mix64(key_ ^ mix64(c * kGolden + kGolden));
}

double RngStream::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::size_t RngStream::below(std::size_t n) {
  if (n == 0) throw NumericsError("RngStream::below(0)");
  // Rejection sampling keeps the result exactly uniform.
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

double RngStream::normal() {
  double u1 = uniform();
  const double u2 = uniform();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Marsaglia & Tsang; shapes below one use the U^(1/a) boost.
double RngStream::gamma(double shape) {
  if (!(shape > 0.0) || !std::isfinite(shape)) throw NumericsError("gamma shape must be positive");
  if (shape < 1.0) {
    double u = uniform();
    if (u <= 0.0) u = 0x1.0p-53;
    return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double RngStream::beta(double a, double b) {
  const double x = gamma(a);
  const double y = gamma(b);
  const double sum = x + y;
  // Both draws can underflow for tiny shapes; fall back to a fair endpoint.
  if (sum <= 0.0) return uniform() < 0.5 ? 0.0 : 1.0;
  return x / sum;
}

std::vector<std::size_t> RngStream::permutation(std::size_t n) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[below(i)]);
  return p;
}

RngStream RngStream::child(std::string_view suffix) const {
  std::string name = name_;
  name += '/';
  name += suffix;
  return RngStream(seed_, std::move(name));
}

}  // namespace autohas
