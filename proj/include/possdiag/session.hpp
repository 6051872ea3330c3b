#pragma once

#include "possdiag/dsl.hpp"
#include "possdiag/engine.hpp"

#include "json.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace possdiag {

class SessionError : public std::runtime_error {
public:
  explicit SessionError(const std::string &msg, std::vector<Diagnostic> diagnostics = {})
      : std::runtime_error(msg), diagnostics(std::move(diagnostics)) {}

  std::vector<Diagnostic> diagnostics;
};

/// The observation clashes with one already recorded.
class ConflictError : public SessionError {
public:
  using SessionError::SessionError;
};

struct Verdict {
  std::string verdict; // "rejected"
  std::string note;

  friend bool operator==(const Verdict &, const Verdict &) = default;
};

struct BoardEntry {
  Hypothesis hypothesis;
  std::vector<ExpectedManifestation> expected;
  std::optional<std::string> discarded_by; // observation that first discarded it
  std::optional<Verdict> verdict;
};

struct Board {
  std::int64_t revision = 0;
  std::vector<BoardEntry> entries;
  std::vector<ProbeSuggestion> probes;
};

/// Builds an observation from service/CLI fields. A level that only exists as
/// an absence alias ("impossible") turns a present observation into an absent one.
ObservationEntry make_observation(const SystemModel &model, const std::string &component, const std::string &output,
                                  const std::string &state, ObsPolarity polarity, const std::string &level);

std::string describe_observation(const Scale &scale, const ObservationEntry &e);

nlohmann::json degree_json(const Scale &scale, const Degree &d);
nlohmann::json board_json(const Scale &scale, const Board &board);
nlohmann::json probes_json(const Scale &scale, const std::vector<ProbeSuggestion> &probes);
nlohmann::json topology_json(const std::string &name, const SystemModel &model);

std::string sha256_hex(const std::string &data);

class Session {
public:
  using JournalSink = std::function<void(const std::string &line)>;

  /// Parses and validates both texts, ranks the initial board and writes the
  /// journal header. Throws SessionError carrying parse diagnostics.
  static Session create(const std::string &model_text, const std::string &obs_text, std::string id = "local",
                        JournalSink sink = {});

  /// Rebuilds a session from journal text, checking every recorded snapshot.
  static Session replay(const std::string &journal_text, JournalSink sink = {});

  const std::string &id() const { return id_; }
  std::int64_t revision() const { return board_.revision; }
  const Board &board() const { return board_; }
  const DiagnosticProblem &problem() const { return problem_; }
  const Scale &scale() const { return problem_.model.scale; }

  /// Returns false when the identical observation is already recorded.
  bool add_observation(const ObservationEntry &e);
  Board what_if(const ObservationEntry &e) const;
  void add_verdict(const std::string &hypothesis, const std::string &verdict, const std::string &note = {});

  const std::vector<std::string> &journal() const { return journal_; }
  std::string journal_text() const;

  /// Digest of every revision's board, as recorded in the journal.
  const std::vector<std::string> &revision_digests() const { return digests_; }

private:
  Session() = default;

  // nullopt: identical observation already present
  std::optional<Observations> extended(const ObservationEntry &e) const;
  Board rank(const DiagnosticProblem &p, std::int64_t revision, const Board *previous,
             const std::string &cause) const;
  void append(const nlohmann::json &event);
  void snapshot();

  std::string id_;
  std::string model_text_;
  std::string obs_text_;
  DiagnosticProblem problem_;
  Board board_;
  std::map<std::string, Verdict> verdicts_;
  std::vector<std::string> journal_;
  std::vector<std::string> digests_;
  JournalSink sink_;
};

} // namespace possdiag
