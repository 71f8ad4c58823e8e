#pragma once

// Black-box cheat-sensitive coin.
//
// Standard(a, b): a cheater biasing toward outcome 0 by eps is caught with
// probability pc = a|eps|^b, and otherwise the coin lands 0 with probability
// 1/2 + eps:
//   p0 = (1 - pc)(1/2 + eps),  p1 = (1 - pc)(1/2 - eps).
//
// Prime(a): the linear relaxation used for the random-walk game,
//   p0 = 1/2 + eps,  p1 = 1/2 - (1 + a) eps,  pc = a eps,
// for 0 <= eps <= eps_max = 1/(2 + 2a). It is never worse for the cheater
// than Standard(a, 1), so bounds proven against it carry over.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <string>
#include <string_view>

#include "cheatflip/error.hpp"

namespace cheatflip {

enum class Variant { Standard, Prime };

inline std::string_view to_string(Variant v) {
  return v == Variant::Standard ? "std" : "prime";
}

struct OutcomeTriple {
  double p0 = 0.5;
  double p1 = 0.5;
  double pc = 0.0;
};

class CheatModel {
 public:
  static CheatModel standard(double a, double b) {
    check_a(a);
    if (!(b >= 1.0) || !std::isfinite(b)) {
      throw DomainError("cheat-detection exponent b must be >= 1, got " + std::to_string(b));
    }
    return CheatModel(a, b, Variant::Standard);
  }

  static CheatModel prime(double a) {
    check_a(a);
    return CheatModel(a, 1.0, Variant::Prime);
  }

  [[nodiscard]] double a() const noexcept { return a_; }
  [[nodiscard]] double b() const noexcept { return b_; }
  [[nodiscard]] Variant variant() const noexcept { return variant_; }
  [[nodiscard]] bool is_prime() const noexcept { return variant_ == Variant::Prime; }

  /// Largest bias of the Prime box, 1/(2+2a).
  [[nodiscard]] double eps_max() const noexcept { return 1.0 / (2.0 + 2.0 * a_); }

  /// Allowed bias interval [lo, hi].
  [[nodiscard]] double eps_lo() const noexcept { return is_prime() ? 0.0 : -eps_hi(); }
  [[nodiscard]] double eps_hi() const noexcept {
    if (is_prime()) return eps_max();
    // |eps| <= 1/2 and a|eps|^b <= 1
    return std::min(0.5, std::pow(1.0 / a_, 1.0 / b_));
  }

  [[nodiscard]] bool in_domain(double eps) const noexcept {
    if (is_prime()) return eps >= 0.0 && eps <= eps_max();
    return std::abs(eps) <= 0.5 && a_ * std::pow(std::abs(eps), b_) <= 1.0;
  }

  friend bool operator==(const CheatModel&, const CheatModel&) = default;

 private:
  CheatModel(double a, double b, Variant v) : a_(a), b_(b), variant_(v) {}

  static void check_a(double a) {
    if (!(a > 0.0) || !std::isfinite(a)) {
      throw DomainError("cheat-detection coefficient a must be positive, got " + std::to_string(a));
    }
  }

  double a_;
  double b_;
  Variant variant_;
};

/// Outcome probabilities the honest player sees when the cheater plays eps.
inline OutcomeTriple triple(const CheatModel& m, double eps) {
  if (m.is_prime()) {
    if (!(eps >= 0.0)) throw DomainError("prime model: eps must be >= 0, got " + std::to_string(eps));
    if (eps > m.eps_max()) {
      throw DomainError("prime model: eps must be <= eps_max = " + std::to_string(m.eps_max()) +
                        ", got " + std::to_string(eps));
    }
    return {0.5 + eps, 0.5 - (1.0 + m.a()) * eps, m.a() * eps};
  }
  if (!(std::abs(eps) <= 0.5)) {
    throw DomainError("standard model: |eps| must be <= 1/2, got " + std::to_string(eps));
  }
  const double pc = m.a() * std::pow(std::abs(eps), m.b());
  if (pc > 1.0) {
    throw DomainError("standard model: a|eps|^b must be <= 1, got " + std::to_string(pc));
  }
  return {(1.0 - pc) * (0.5 + eps), (1.0 - pc) * (0.5 - eps), pc};
}

/// True when the Prime box is at least as good for the cheater as the
/// Standard b=1 box at this eps: higher p0 and no higher catch probability.
inline bool dominates(const CheatModel& prime, const CheatModel& standard, double eps) {
  if (!prime.is_prime()) throw DomainError("dominates: first model must be prime");
  if (standard.is_prime()) throw DomainError("dominates: second model must be standard");
  if (standard.b() != 1.0) throw DomainError("dominates: standard model must have b = 1");
  if (prime.a() != standard.a()) throw DomainError("dominates: models must share a");
  const auto p = triple(prime, eps);
  const auto s = triple(standard, eps);
  return p.p0 >= s.p0 && p.pc <= s.pc;
}

namespace detail {

inline std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline double parse_decimal(std::string_view text, std::string_view what) {
  text = trim(text);
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc{} || ptr != end) {
    throw ParseError("bad value for " + std::string(what) + ": '" + std::string(text) + "'");
  }
  return v;
}

}  // namespace detail

/// Parses "std:a=1,b=2" or "prime:a=1" (case-insensitive).
inline CheatModel parse_model(std::string_view text) {
  const std::string s = detail::lower(detail::trim(text));
  const auto colon = s.find(':');
  if (colon == std::string::npos) {
    throw ParseError("model must look like 'std:a=1,b=2' or 'prime:a=1', got '" + s + "'");
  }
  const std::string kind(detail::trim(std::string_view(s).substr(0, colon)));
  std::string_view rest = std::string_view(s).substr(colon + 1);

  double a = 0.0;
  double b = 0.0;
  bool have_a = false;
  bool have_b = false;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const auto item = detail::trim(rest.substr(0, comma));
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key=value in model, got '" + std::string(item) + "'");
    const auto key = detail::trim(item.substr(0, eq));
    const auto val = item.substr(eq + 1);
    if (key == "a" && !have_a) {
      a = detail::parse_decimal(val, "a");
      have_a = true;
    } else if (key == "b" && !have_b) {
      b = detail::parse_decimal(val, "b");
      have_b = true;
    } else {
      throw ParseError("unexpected or repeated model parameter '" + std::string(key) + "'");
    }
  }
  if (!have_a) throw ParseError("model is missing parameter a");
  if (kind == "std" || kind == "standard") {
    if (!have_b) throw ParseError("standard model is missing parameter b");
    return CheatModel::standard(a, b);
  }
  if (kind == "prime") {
    if (have_b && b != 1.0) throw DomainError("prime model requires b = 1");
    return CheatModel::prime(a);
  }
  throw ParseError("unknown model kind '" + kind + "' (expected std or prime)");
}

inline std::string format_model(const CheatModel& m) {
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  if (m.is_prime()) return "prime:a=" + num(m.a());
  return "std:a=" + num(m.a()) + ",b=" + num(m.b());
}

}  // namespace cheatflip
