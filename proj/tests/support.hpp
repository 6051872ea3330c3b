#pragma once

#include "possdiag/dsl.hpp"
#include "possdiag/engine.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace testing_support {

inline std::string read_text(const std::string &path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

inline std::string model_path(const std::string &file) { return std::string(POSSDIAG_MODELS_DIR) + "/" + file; }

inline possdiag::SystemModel load_model_text(const std::string &text) {
  auto r = possdiag::parse_model(text, "test");
  if (!r.ok()) {
    std::string msg;
    for (const auto &e : r.errors) msg += e.to_string() + "\n";
    throw std::runtime_error(msg);
  }
  return *r.model;
}

inline possdiag::ObservationParseResult load_obs_text(const std::string &text, const possdiag::SystemModel &m) {
  auto r = possdiag::parse_observations(text, m, "test");
  if (!r.ok()) {
    std::string msg;
    for (const auto &e : r.errors) msg += e.to_string() + "\n";
    throw std::runtime_error(msg);
  }
  return r;
}

inline possdiag::DiagnosticProblem problem_from(const std::string &model_text, const std::string &obs_text) {
  auto m = load_model_text(model_text);
  auto o = load_obs_text(obs_text, m);
  return possdiag::compose_problem(std::move(m), std::move(o.context), std::move(o.observations));
}

inline std::string fixture_model() { return read_text(model_path("solar_array.pdm")); }
inline std::string fixture_initial() { return read_text(model_path("solar_array_initial.pdo")); }
inline std::string fixture_probes() { return read_text(model_path("solar_array_probes.pdo")); }

inline possdiag::DiagnosticProblem fixture_initial_problem() { return problem_from(fixture_model(), fixture_initial()); }
inline possdiag::DiagnosticProblem fixture_probed_problem() {
  return problem_from(fixture_model(), fixture_initial() + fixture_probes());
}

inline possdiag::Disorder sig(const std::string &comp, const std::string &out, const std::string &state) {
  return possdiag::Disorder::signature(comp, out, state);
}

inline const possdiag::Hypothesis *find_hypothesis(const std::vector<possdiag::Hypothesis> &hs, const std::string &id) {
  for (const auto &h : hs)
    if (h.disorder.id() == id) return &h;
  return nullptr;
}

} // namespace testing_support
