#pragma once

#include "possdiag/model.hpp"

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace possdiag {

class DiagnosisError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// REL_LINKS / REL_COMPS of one manifestation, plus the abnormal output states
/// that lie on a possible influence path to it.
struct RelevantSubtheory {
  std::set<std::size_t> links; // indices into model.links
  std::set<std::string> components;
  std::set<Manifestation> states; // (component, output, state) reached through a relevant link
};

RelevantSubtheory relevant_subtheory(const DiagnosticProblem &problem, const Manifestation &m);
std::set<std::size_t> relevant_links(const DiagnosticProblem &problem, const Manifestation &m);
std::set<std::string> relevant_comps(const DiagnosticProblem &problem, const Manifestation &m);

/// Best derivation degree of `m` (any output state, observable or not) from
/// {d} + SD + CXT: max over chains of the min of rule certainties.
Degree entailment_weight(const DiagnosticProblem &problem, const Disorder &d, const Manifestation &m);

/// Degree to which {d} + SD + CXT forbids `m`: chains ending in an exclusion
/// rule for m, or deriving another state of m's output.
Degree exclusion_weight(const DiagnosticProblem &problem, const Disorder &d, const Manifestation &m);

/// Inconsistency degree of SD + CXT + {d} alone (0 for coherent chains).
Degree self_inconsistency(const DiagnosticProblem &problem, const Disorder &d);

/// 1 - Inc(SD + CXT + OBS + {d}).
Degree consistency_degree(const DiagnosticProblem &problem, const Disorder &d);

/// Delta*(d) = min over M+ of beta_j -> entailment_weight(d, m_j) (Goedel).
Degree abductive_degree(const DiagnosticProblem &problem, const Disorder &d);

struct DiagnoseOptions {
  /// Also generate signatures of several abnormal outputs of one component.
  bool multi_output_signatures = false;
  std::size_t max_signature_size = 2;
};

/// Fault modes of components relevant to every present manifestation, and
/// abnormal output states on a relevant influence path to every present
/// manifestation. Signatures touching M+ are excluded. Throws DiagnosisError
/// when M+ is empty.
std::vector<Disorder> enumerate_candidates(const DiagnosticProblem &problem, const DiagnoseOptions &opts = {});

enum class PreferenceClass { identified_fault, upstream_signature, signature };
enum class HypothesisStatus { active, discarded };

const char *to_string(PreferenceClass c);
const char *to_string(HypothesisStatus s);

struct Hypothesis {
  Disorder disorder;
  Degree abductive_degree;   // 0 unless SD + CXT + {d} + M- is fully consistent
  Degree consistency_degree; // 1 - N(not d)
  bool relevant = true;      // on an influence path to every present manifestation
  PreferenceClass preference_class = PreferenceClass::signature;
  HypothesisStatus status = HypothesisStatus::active;

  bool active() const { return status == HypothesisStatus::active; }
  bool abductive() const { return active() && abductive_degree.positive(); }
};

/// Ranks every disorder relevant to at least one present manifestation.
/// Hypotheses inconsistent with OBS or irrelevant to some present
/// manifestation are kept with status `discarded`. Order: Delta* desc,
/// consistency desc, preference class, signature size, id.
std::vector<Hypothesis> diagnose(const DiagnosticProblem &problem, const DiagnoseOptions &opts = {});

/// Both must be signatures: every state of d2 is derivable from d1 with a
/// positive degree, and not conversely.
bool dominates(const DiagnosticProblem &problem, const Disorder &d1, const Disorder &d2);

enum class Expectation { none, present, absent };
const char *to_string(Expectation e);

struct ExpectedManifestation {
  Manifestation manifestation;
  Expectation expectation = Expectation::none;
  Degree degree;

  friend bool operator==(const ExpectedManifestation &, const ExpectedManifestation &) = default;
};

/// Observable, not yet observed manifestations that d predicts present or
/// absent with a positive degree.
std::vector<ExpectedManifestation> expected_manifestations(const DiagnosticProblem &problem, const Disorder &d);

struct HypothesisExpectation {
  std::string hypothesis;
  Expectation expectation = Expectation::none;
  Degree degree;
};

struct ProbeSuggestion {
  Manifestation manifestation;
  std::vector<HypothesisExpectation> expectations; // one per active hypothesis, board order
  std::int64_t discrimination_score = 0;           // active pairs with differing expectations
  Degree max_degree;
};

/// Candidate probes are the expected manifestations of active hypotheses,
/// ordered by discrimination score, then expectation degree, then id.
std::vector<ProbeSuggestion> suggest_probes(const DiagnosticProblem &problem, const std::vector<Hypothesis> &hypotheses);

} // namespace possdiag
