#pragma once

#include <boost/rational.hpp>

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace possdiag {

using Rational = boost::rational<std::int64_t>;

/// A certainty level on a finite ordinal scale embedded in [0,1], held as an
/// exact rational. Only min, max, order reversal and Goedel implication are
/// ever applied to it.
class Degree {
public:
  constexpr Degree() = default;
  explicit Degree(Rational v);
  Degree(std::int64_t num, std::int64_t den) : Degree(Rational(num, den)) {}

  static Degree zero() { return Degree(); }
  static Degree one() { return Degree(Rational(1)); }

  const Rational &value() const { return value_; }
  std::int64_t numerator() const { return value_.numerator(); }
  std::int64_t denominator() const { return value_.denominator(); }

  bool is_zero() const { return value_.numerator() == 0; }
  bool is_one() const { return value_.numerator() == value_.denominator(); }
  bool positive() const { return value_.numerator() > 0; }

  friend bool operator==(const Degree &a, const Degree &b) { return a.value_ == b.value_; }
  friend std::strong_ordering operator<=>(const Degree &a, const Degree &b) {
    if (a.value_ < b.value_) return std::strong_ordering::less;
    if (b.value_ < a.value_) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }

  /// "n/d", or "n" when the denominator is 1.
  std::string to_string() const;

private:
  Rational value_{0};
};

Degree min_combine(Degree a, Degree b);
Degree max_combine(Degree a, Degree b);
/// Order-reversing map 1 - a.
Degree complement(Degree a);
/// Goedel implication: 1 if a <= b, else b.
Degree godel_implies(Degree a, Degree b);

class ScaleError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct Level {
  std::string name;
  Degree value;

  friend bool operator==(const Level &, const Level &) = default;
};

/// Lower-cases and maps spaces/hyphens to underscores, so "Almost certain"
/// and "almost_certain" name the same level.
std::string normalize_level_name(std::string_view name);

/// Named levels, strictly decreasing from 1 to 0, closed under complement.
class Scale {
public:
  Scale() = default;

  /// Validates and builds a scale. Levels may be given in any order; they are
  /// stored in decreasing value order. Throws ScaleError on a broken invariant.
  static Scale make(std::vector<Level> levels);

  /// certain=1, almost_certain=4/5, likely=3/5, doubtful=2/5, remote=1/5,
  /// possible=0.
  static Scale default_scale();

  const std::vector<Level> &levels() const { return levels_; }

  /// Throws ScaleError naming the token when the level is unknown.
  Degree level_of(std::string_view name) const;
  std::optional<Degree> find(std::string_view name) const;

  /// Resolves a qualifier used on a negated literal. Besides plain level
  /// names this accepts impossible / almost_impossible / unlikely, which name
  /// the absence certainty of certain / almost_certain / likely.
  std::optional<Degree> find_absence(std::string_view name) const;

  bool contains(Degree d) const;
  /// Name of the level carrying this value. Throws ScaleError if off-scale.
  const std::string &name_of(Degree d) const;

  friend bool operator==(const Scale &, const Scale &) = default;

private:
  std::vector<Level> levels_;
};

} // namespace possdiag
