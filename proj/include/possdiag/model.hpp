#pragma once

#include "possdiag/scale.hpp"

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace possdiag {

/// Location of a parsed entity. Spans never take part in structural equality:
/// a model re-parsed from its serialization compares equal to the original.
struct SourceSpan {
  std::string file;
  int line = 1;
  int column = 1;

  friend bool operator==(const SourceSpan &, const SourceSpan &) { return true; }
};

enum class ParamKind { analog, digital, custom };

struct ParamDecl {
  std::string id;
  ParamKind kind = ParamKind::analog;
  std::vector<std::string> states; // abnormal states; nominal is implicit
  bool observable = false;         // outputs only
  SourceSpan span;

  friend bool operator==(const ParamDecl &, const ParamDecl &) = default;
};

enum class LiteralKind { input_state, fault_mode };

/// One antecedent literal: `input=STATE` or a bare fault mode name.
struct Literal {
  LiteralKind kind = LiteralKind::input_state;
  std::string param; // empty for fault modes
  std::string value; // state, or fault mode name

  friend bool operator==(const Literal &, const Literal &) = default;
  friend auto operator<=>(const Literal &, const Literal &) = default;
};

enum class Polarity { entails, excludes };

/// `entails` encodes N(not d or m) >= certainty, `excludes` encodes
/// N(not d or not m) >= certainty, with d the conjunction of the antecedent.
struct BehaviorRule {
  std::optional<std::string> config; // at most one configuration literal
  std::vector<Literal> antecedent;
  std::string output;
  std::string state;
  Polarity polarity = Polarity::entails;
  Degree certainty;
  SourceSpan span;

  friend bool operator==(const BehaviorRule &, const BehaviorRule &) = default;
};

struct Component {
  std::string id;
  /// Trusted components (wiring, buses, grounds) take part in propagation and
  /// relevance but never yield candidate disorders.
  bool trusted = false;
  std::vector<ParamDecl> inputs;
  std::vector<ParamDecl> outputs;
  std::vector<std::string> config_modes;
  std::vector<std::string> fault_modes;
  std::vector<BehaviorRule> rules;
  SourceSpan span;

  const ParamDecl *find_input(std::string_view id) const;
  const ParamDecl *find_output(std::string_view id) const;
  bool has_fault(std::string_view f) const;
  bool has_config(std::string_view m) const;

  friend bool operator==(const Component &, const Component &) = default;
};

struct Endpoint {
  std::string component;
  std::string param;

  friend bool operator==(const Endpoint &, const Endpoint &) = default;
  friend auto operator<=>(const Endpoint &, const Endpoint &) = default;
};

/// Fan-out connection: copies one output, state unchanged, to its targets.
struct Link {
  Endpoint source;
  std::vector<Endpoint> targets;
  SourceSpan span;

  friend bool operator==(const Link &, const Link &) = default;
};

struct SystemModel {
  Scale scale;
  std::vector<Component> components;
  std::vector<Link> links;

  const Component *find(std::string_view id) const;
  std::optional<std::size_t> index_of(std::string_view id) const;

  friend bool operator==(const SystemModel &, const SystemModel &) = default;
};

struct Context {
  std::map<std::string, std::string> assignments; // component -> config mode

  friend bool operator==(const Context &, const Context &) = default;
};

struct Manifestation {
  std::string component;
  std::string output;
  std::string state;

  std::string to_string() const; // comp.out(STATE)

  friend bool operator==(const Manifestation &, const Manifestation &) = default;
  friend auto operator<=>(const Manifestation &, const Manifestation &) = default;
};

enum class ObsPolarity { present, absent };

/// Fuzzy M+ (present, degree beta) and M- (absent, degree rho).
struct Observations {
  std::map<Manifestation, Degree> present;
  std::map<Manifestation, Degree> absent;

  bool empty() const { return present.empty() && absent.empty(); }
  friend bool operator==(const Observations &, const Observations &) = default;
};

struct StateLiteral {
  std::string output;
  std::string state;

  friend bool operator==(const StateLiteral &, const StateLiteral &) = default;
  friend auto operator<=>(const StateLiteral &, const StateLiteral &) = default;
};

/// A candidate explanation: an identified fault mode of one component, or a
/// signature of abnormal output states of one component.
struct Disorder {
  enum class Kind { fault, signature };

  Kind kind = Kind::signature;
  std::string component;
  std::string fault_mode;            // Kind::fault
  std::vector<StateLiteral> outputs; // Kind::signature, sorted, non-empty

  static Disorder fault(std::string component, std::string mode);
  static Disorder signature(std::string component, std::vector<StateLiteral> outputs);
  static Disorder signature(std::string component, std::string output, std::string state);

  /// `comp[fault]`, `comp.out(STATE)`, or `comp{a(S),b(T)}`.
  std::string id() const;

  friend bool operator==(const Disorder &, const Disorder &) = default;
  friend auto operator<=>(const Disorder &, const Disorder &) = default;
};

enum class Severity { error, warning };

struct Violation {
  Severity severity = Severity::error;
  std::string component;
  std::string message;
  SourceSpan span;
};

using ValidationReport = std::vector<Violation>;

bool has_errors(const ValidationReport &report);

/// Checks every structural invariant of the model. Violations are returned as
/// data in a deterministic order; cycles in the link graph are warnings.
ValidationReport validate_model(const SystemModel &model);

class ModelError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// SD + CXT + OBS. Rules whose configuration literal differs from the
/// context assignment of their component are inactive.
struct DiagnosticProblem {
  SystemModel model;
  Context context;
  Observations observations;
  std::vector<std::vector<bool>> rule_active; // [component][rule]

  bool active(std::size_t component, std::size_t rule) const {
    return rule_active[component][rule];
  }
};

/// Throws ModelError on an invalid model, an unknown or missing config mode,
/// or an observation that is unknown, unobservable, non-positive or
/// conflicting.
DiagnosticProblem compose_problem(SystemModel model, Context context, Observations observations);

/// Checks one observation against the model, throwing ModelError if it names
/// an unknown or unobservable output or an undeclared state.
void check_manifestation(const SystemModel &model, const Manifestation &m);

std::set<Endpoint> observable_outputs(const SystemModel &model);

} // namespace possdiag
