#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace airhockey {

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;

using Vec2d = Vec2<double>;
using Vec3d = Vec3<double>;

/// Every stochastic component draws from this engine; its output sequence is
/// fixed by the standard, so seeded runs are reproducible.
using Rng = std::mt19937_64;

/// Table halves. Side A defends the goal at x = -length/2, side B the one at
/// x = +length/2.
enum class Side : std::uint8_t { A = 0, B = 1 };

constexpr Side other(Side s) { return s == Side::A ? Side::B : Side::A; }
constexpr std::size_t index(Side s) { return static_cast<std::size_t>(s); }

std::string_view to_string(Side s);

/// Raised for malformed or inconsistent configuration files.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exact fraction with a positive denominator, always stored reduced.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  constexpr Rational() = default;
  constexpr Rational(std::int64_t n, std::int64_t d = 1) : num(n), den(d) {
    if (den == 0) throw std::invalid_argument("Rational: zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const auto g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  constexpr double to_double() const {
    return static_cast<double>(num) / static_cast<double>(den);
  }

  friend constexpr bool operator==(const Rational&, const Rational&) = default;
  friend constexpr Rational operator+(const Rational& a, const Rational& b) {
    return Rational(a.num * b.den + b.num * a.den, a.den * b.den);
  }
  friend constexpr Rational operator-(const Rational& a) {
    return Rational(-a.num, a.den);
  }
};

std::string to_string(const Rational& r);

/// 64-bit FNV-1a, used for config and checkpoint fingerprints.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

/// Derives an independent stream seed from a parent seed and a tag.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag);

}  // namespace airhockey
