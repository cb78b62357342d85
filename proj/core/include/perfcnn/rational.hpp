#pragma once

#include <numeric>
#include <stdexcept>
#include <string>

namespace perfcnn {

// Perforation rates are exact fractions (e.g. 3/4), so ladder positions and
// file round-trips never suffer decimal drift.
struct Rational {
  long long num = 0;
  long long den = 1;

  Rational() = default;
  Rational(long long n, long long d) : num(n), den(d) {
    if (d <= 0) throw std::invalid_argument("Rational: denominator must be positive");
    if (n < 0) throw std::invalid_argument("Rational: negative rate");
    const long long g = std::gcd(num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool zero() const { return num == 0; }
  std::string str() const { return std::to_string(num) + "/" + std::to_string(den); }

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num == b.num && a.den == b.den;
  }
};

// Accepts "p/q", a finite decimal ("0.8" -> 4/5, converted exactly), or a
// bare integer ("0" disables perforation).
inline Rational parse_rate(const std::string& text) {
  const auto slash = text.find('/');
  const auto dot = text.find('.');
  try {
    if (slash != std::string::npos) {
      return Rational(std::stoll(text.substr(0, slash)), std::stoll(text.substr(slash + 1)));
    }
    if (dot != std::string::npos) {
      const std::string whole = dot == 0 ? "0" : text.substr(0, dot);
      const std::string frac = text.substr(dot + 1);
      if (frac.empty() || frac.size() > 9 ||
          frac.find_first_not_of("0123456789") != std::string::npos) {
        throw std::invalid_argument("bad decimal");
      }
      long long scale = 1;
      for (size_t i = 0; i < frac.size(); ++i) scale *= 10;
      return Rational(std::stoll(whole) * scale + std::stoll(frac), scale);
    }
    return Rational(std::stoll(text), 1);
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("bad rate '" + text + "': expected a fraction like 3/4");
  } catch (const std::out_of_range&) {
    throw std::invalid_argument("bad rate '" + text + "': value out of range");
  }
}

}  // namespace perfcnn
