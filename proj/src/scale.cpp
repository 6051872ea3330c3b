#include "possdiag/scale.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>
#include <utility>

namespace possdiag {

Degree::Degree(Rational v) : value_(v) {
  if (v < 0 || v > 1)
    throw ScaleError("degree " + std::to_string(v.numerator()) + "/" +
                     std::to_string(v.denominator()) + " outside [0,1]");
}

std::string Degree::to_string() const {
  if (value_.denominator() == 1) return std::to_string(value_.numerator());
  return std::to_string(value_.numerator()) + "/" + std::to_string(value_.denominator());
}

Degree min_combine(Degree a, Degree b) { return b < a ? b : a; }
Degree max_combine(Degree a, Degree b) { return a < b ? b : a; }
Degree complement(Degree a) { return Degree(Rational(1) - a.value()); }
Degree godel_implies(Degree a, Degree b) { return a <= b ? Degree::one() : b; }

std::string normalize_level_name(std::string_view name) {
  std::string out;
  out.reserve(name.size());
  for (char c : name) {
    if (c == ' ' || c == '-' || c == '\t')
      out.push_back('_');
    else
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

Scale Scale::make(std::vector<Level> levels) {
  if (levels.size() < 2) throw ScaleError("scale needs at least the levels 1 and 0");
  std::set<std::string> names;
  for (auto &l : levels) {
    l.name = normalize_level_name(l.name);
    if (l.name.empty()) throw ScaleError("empty level name");
    if (!names.insert(l.name).second) throw ScaleError("duplicate level name '" + l.name + "'");
  }
  std::stable_sort(levels.begin(), levels.end(),
                   [](const Level &a, const Level &b) { return b.value < a.value; });
  for (std::size_t i = 1; i < levels.size(); ++i)
    if (levels[i].value == levels[i - 1].value)
      throw ScaleError("levels '" + levels[i - 1].name + "' and '" + levels[i].name +
                       "' share the value " + levels[i].value.to_string());
  if (!levels.front().value.is_one()) throw ScaleError("scale has no level with value 1");
  if (!levels.back().value.is_zero()) throw ScaleError("scale has no level with value 0");

  Scale s;
  s.levels_ = std::move(levels);
  for (const auto &l : s.levels_)
    if (!s.contains(complement(l.value)))
      throw ScaleError("scale is not symmetric: complement of '" + l.name + "' (" +
                       complement(l.value).to_string() + ") is not a level");
  return s;
}

Scale Scale::default_scale() {
  return make({{"certain", Degree(1, 1)},
               {"almost_certain", Degree(4, 5)},
               {"likely", Degree(3, 5)},
               {"doubtful", Degree(2, 5)},
               {"remote", Degree(1, 5)},
               {"possible", Degree(0, 1)}});
}

std::optional<Degree> Scale::find(std::string_view name) const {
  const auto key = normalize_level_name(name);
  for (const auto &l : levels_)
    if (l.name == key) return l.value;
  return std::nullopt;
}

Degree Scale::level_of(std::string_view name) const {
  if (auto d = find(name)) return *d;
  throw ScaleError("unknown level '" + std::string(name) + "'");
}

std::optional<Degree> Scale::find_absence(std::string_view name) const {
  static constexpr std::array<std::pair<std::string_view, std::string_view>, 3> aliases{{
      {"impossible", "certain"},
      {"almost_impossible", "almost_certain"},
      {"unlikely", "likely"},
  }};
  if (auto d = find(name)) return d;
  const auto key = normalize_level_name(name);
  for (const auto &[alias, target] : aliases)
    if (key == alias) return find(target);
  return std::nullopt;
}

bool Scale::contains(Degree d) const {
  return std::any_of(levels_.begin(), levels_.end(),
                     [&](const Level &l) { return l.value == d; });
}

const std::string &Scale::name_of(Degree d) const {
  for (const auto &l : levels_)
    if (l.value == d) return l.name;
  throw ScaleError("degree " + d.to_string() + " is not on the scale");
}

} // namespace possdiag
