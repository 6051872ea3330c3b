#pragma once

// Textual model (.pdm) and observation (.pdo) languages.
//
//   scale { certain=1 almost_certain=4/5 likely=3/5 doubtful=2/5 remote=1/5 possible=0 }
//   component rel {
//     config {ON OFF}
//     input in: analog{ABS DEG};
//     output out: analog{ABS DEG} observable;
//     fault stuck_closed;
//     rule [ON] in=ABS => out=ABS certain;
//     rule [OFF] in=ABS =/> out=ABS certain;
//   }
//   link rel.out -> res.in, comp_1.in;
//
//   context rel_0=OFF rel_1=ON;
//   obs comp.out = STATE level;     # present
//   obs comp.out != STATE level;    # absent
//
// `#` starts a comment. A statement ends at `;` or at the end of its line.

#include "possdiag/model.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace possdiag {

struct Diagnostic {
  SourceSpan span;
  std::string message;

  std::string to_string() const; // file:line:col: message
};

struct ModelParseResult {
  std::optional<SystemModel> model;
  std::vector<Diagnostic> errors;
  ValidationReport report; // warnings that did not block the parse

  bool ok() const { return model.has_value() && errors.empty(); }
};

/// Total: never throws on malformed input, reports every error with a span.
ModelParseResult parse_model(std::string_view text, const std::string &file = "<model>");

struct ObservationEntry {
  Manifestation manifestation;
  ObsPolarity polarity = ObsPolarity::present;
  Degree degree;
};

struct ObservationParseResult {
  Context context;
  Observations observations;
  std::vector<Diagnostic> errors;

  bool ok() const { return errors.empty(); }
};

ObservationParseResult parse_observations(std::string_view text, const SystemModel &model,
                                          const std::string &file = "<observations>");

/// Parses one `obs ...` statement (the leading keyword is optional). Throws
/// ModelError with the diagnostic text on failure.
ObservationEntry parse_observation_statement(std::string_view text, const SystemModel &model);

std::string serialize_model(const SystemModel &model);
std::string serialize_observations(const SystemModel &model, const Context &context,
                                   const Observations &observations);

} // namespace possdiag
