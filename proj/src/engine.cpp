#include "possdiag/engine.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <tuple>

namespace possdiag {

const char *to_string(PreferenceClass c) {
  switch (c) {
  case PreferenceClass::identified_fault: return "identified_fault";
  case PreferenceClass::upstream_signature: return "upstream_signature";
  case PreferenceClass::signature: return "signature";
  }
  return "signature";
}

const char *to_string(HypothesisStatus s) { return s == HypothesisStatus::active ? "active" : "discarded"; }

const char *to_string(Expectation e) {
  switch (e) {
  case Expectation::none: return "none";
  case Expectation::present: return "present";
  case Expectation::absent: return "absent";
  }
  return "none";
}

namespace {

// A slot is one propositional variable of the problem: a component output, an
// unlinked input, or the fault mode of a component. Linked inputs share the
// slot of the output that feeds them, since links carry states unchanged.
struct Slot {
  std::size_t component = 0;
  std::string name;
  std::vector<std::string> states;
  bool observable = false;
  bool is_output = false;
};

struct Atom {
  int slot = -1;
  int state = -1;
};

struct CompiledRule {
  std::size_t component = 0;
  const BehaviorRule *rule = nullptr;
  std::vector<Atom> antecedent;
  Atom consequent;
  bool active = true;
};

struct WeightedAtom {
  Atom atom;
  Degree degree;
};

using Facts = std::vector<std::vector<Degree>>;

class Network {
public:
  explicit Network(const DiagnosticProblem &p) : problem_(p) {
    const auto &model = p.model;
    fault_slot_.assign(model.components.size(), -1);
    for (std::size_t ci = 0; ci < model.components.size(); ++ci) {
      const auto &c = model.components[ci];
      for (const auto &o : c.outputs) {
        output_slot_[{c.id, o.id}] = add_slot(ci, o.id, o.states, o.observable, true);
      }
      if (!c.fault_modes.empty()) fault_slot_[ci] = add_slot(ci, "fault", c.fault_modes, false, false);
    }
    for (std::size_t li = 0; li < model.links.size(); ++li) {
      const auto &l = model.links[li];
      const int src = output_slot_.at({l.source.component, l.source.param});
      for (const auto &t : l.targets) input_feed_[{t.component, t.param}] = {src, static_cast<int>(li)};
    }
    for (std::size_t ci = 0; ci < model.components.size(); ++ci) {
      const auto &c = model.components[ci];
      for (const auto &in : c.inputs)
        if (!input_feed_.count({c.id, in.id})) input_feed_[{c.id, in.id}] = {add_slot(ci, in.id, in.states, false, false), -1};
    }
    for (std::size_t ci = 0; ci < model.components.size(); ++ci) {
      const auto &c = model.components[ci];
      for (std::size_t ri = 0; ri < c.rules.size(); ++ri) {
        const auto &r = c.rules[ri];
        CompiledRule cr;
        cr.component = ci;
        cr.rule = &r;
        cr.active = p.active(ci, ri);
        for (const auto &lit : r.antecedent) {
          if (lit.kind == LiteralKind::fault_mode) {
            const int s = fault_slot_[ci];
            cr.antecedent.push_back({s, state_index(s, lit.value)});
          } else {
            const int s = input_feed_.at({c.id, lit.param}).first;
            cr.antecedent.push_back({s, state_index(s, lit.value)});
          }
        }
        const int o = output_slot_.at({c.id, r.output});
        cr.consequent = {o, state_index(o, r.state)};
        rules_.push_back(std::move(cr));
      }
    }
  }

  const std::vector<Slot> &slots() const { return slots_; }

  Atom atom_of(const Manifestation &m) const {
    auto it = output_slot_.find({m.component, m.output});
    if (it == output_slot_.end()) throw ModelError("unknown output " + m.component + "." + m.output);
    const int st = state_index(it->second, m.state);
    if (st < 0) throw ModelError("unknown state in " + m.to_string());
    return {it->second, st};
  }

  Manifestation manifestation_of(Atom a) const {
    const auto &s = slots_[a.slot];
    return {problem_.model.components[s.component].id, s.name, s.states[a.state]};
  }

  std::vector<WeightedAtom> seeds_of(const Disorder &d) const {
    std::vector<WeightedAtom> seeds;
    if (d.kind == Disorder::Kind::fault) {
      const auto ci = problem_.model.index_of(d.component);
      if (!ci || fault_slot_[*ci] < 0) throw ModelError("unknown fault disorder " + d.id());
      const int st = state_index(fault_slot_[*ci], d.fault_mode);
      if (st < 0) throw ModelError("unknown fault disorder " + d.id());
      seeds.push_back({{fault_slot_[*ci], st}, Degree::one()});
    } else {
      if (d.outputs.empty()) throw ModelError("empty signature disorder");
      for (const auto &o : d.outputs) seeds.push_back({atom_of({d.component, o.output, o.state}), Degree::one()});
    }
    return seeds;
  }

  std::vector<WeightedAtom> present_seeds() const {
    std::vector<WeightedAtom> out;
    for (const auto &[m, beta] : problem_.observations.present) out.push_back({atom_of(m), beta});
    return out;
  }

  std::vector<WeightedAtom> absent_clauses() const {
    std::vector<WeightedAtom> out;
    for (const auto &[m, rho] : problem_.observations.absent) out.push_back({atom_of(m), rho});
    return out;
  }

  Degree at(const Facts &f, Atom a) const { return f[a.slot][a.state]; }

  // Least fixed point of max-min forward chaining over active entailment rules.
  Facts derive(const std::vector<WeightedAtom> &seeds) const {
    Facts f(slots_.size());
    for (std::size_t i = 0; i < slots_.size(); ++i) f[i].assign(slots_[i].states.size(), Degree::zero());
    for (const auto &s : seeds) f[s.atom.slot][s.atom.state] = max_combine(f[s.atom.slot][s.atom.state], s.degree);
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto &r : rules_) {
        if (!r.active || r.rule->polarity != Polarity::entails) continue;
        const Degree fire = firing(f, r);
        auto &slot = f[r.consequent.slot][r.consequent.state];
        if (slot < fire) {
          slot = fire;
          changed = true;
        }
      }
    }
    return f;
  }

  Degree firing(const Facts &f, const CompiledRule &r) const {
    Degree fire = r.rule->certainty;
    for (const auto &a : r.antecedent) fire = min_combine(fire, at(f, a));
    return fire;
  }

  // Inconsistency degree of the Horn base: the best-supported violated
  // negative clause (exclusion rules, single-valuedness of every slot, M-).
  Degree inconsistency(const Facts &f, const std::vector<WeightedAtom> &negatives) const {
    Degree inc;
    for (const auto &vals : f)
      for (std::size_t i = 0; i < vals.size(); ++i)
        for (std::size_t j = i + 1; j < vals.size(); ++j) inc = max_combine(inc, min_combine(vals[i], vals[j]));
    for (const auto &r : rules_) {
      if (!r.active || r.rule->polarity != Polarity::excludes) continue;
      inc = max_combine(inc, min_combine(firing(f, r), at(f, r.consequent)));
    }
    for (const auto &n : negatives) inc = max_combine(inc, min_combine(n.degree, at(f, n.atom)));
    return inc;
  }

  Degree exclusion(const Facts &f, Atom a) const {
    Degree x;
    for (const auto &r : rules_) {
      if (!r.active || r.rule->polarity != Polarity::excludes) continue;
      if (r.consequent.slot == a.slot && r.consequent.state == a.state) x = max_combine(x, firing(f, r));
    }
    for (std::size_t s = 0; s < f[a.slot].size(); ++s)
      if (static_cast<int>(s) != a.state) x = max_combine(x, f[a.slot][s]);
    return x;
  }

  RelevantSubtheory relevance(const Manifestation &m) const {
    const auto &model = problem_.model;
    RelevantSubtheory rel;
    const Atom root = atom_of(m);
    rel.components.insert(m.component);
    std::set<std::pair<int, int>> seen{{root.slot, root.state}};
    std::deque<Atom> queue{root};
    while (!queue.empty()) {
      const Atom cur = queue.front();
      queue.pop_front();
      const auto &slot = slots_[cur.slot];
      const auto ci = slot.component;
      const auto &comp = model.components[ci];
      for (const auto &in : comp.inputs) {
        const auto [src, link] = input_feed_.at({comp.id, in.id});
        if (link < 0) continue;
        for (const auto &gamma : in.states) {
          if (!locally_consistent(ci, in.id, gamma, slot.name, slot.states[cur.state])) continue;
          rel.links.insert(static_cast<std::size_t>(link));
          rel.components.insert(model.links[link].source.component);
          const Atom next{src, state_index(src, gamma)};
          rel.states.insert(manifestation_of(next));
          if (seen.insert({next.slot, next.state}).second) queue.push_back(next);
        }
      }
    }
    return rel;
  }

  const std::map<std::pair<std::string, std::string>, int> &output_slots() const { return output_slot_; }

private:
  int add_slot(std::size_t comp, std::string name, const std::vector<std::string> &states, bool observable,
               bool is_output) {
    slots_.push_back({comp, std::move(name), states, observable, is_output});
    return static_cast<int>(slots_.size() - 1);
  }

  int state_index(int slot, const std::string &state) const {
    const auto &st = slots_[slot].states;
    auto it = std::find(st.begin(), st.end(), state);
    return it == st.end() ? -1 : static_cast<int>(it - st.begin());
  }

  // Whether `in=gamma` is consistent to a positive degree with `out=state`
  // under the component's own active rules: only certain rules fired by this
  // input literal alone can rule the pair out.
  bool locally_consistent(std::size_t ci, const std::string &in, const std::string &gamma, const std::string &out,
                          const std::string &state) const {
    const auto &c = problem_.model.components[ci];
    for (std::size_t ri = 0; ri < c.rules.size(); ++ri) {
      const auto &r = c.rules[ri];
      if (!problem_.active(ci, ri) || !r.certainty.is_one() || r.output != out) continue;
      const bool fired = std::all_of(r.antecedent.begin(), r.antecedent.end(), [&](const Literal &l) {
        return l.kind == LiteralKind::input_state && l.param == in && l.value == gamma;
      });
      if (!fired) continue;
      if (r.polarity == Polarity::excludes && r.state == state) return false;
      if (r.polarity == Polarity::entails && r.state != state) return false;
    }
    return true;
  }

  const DiagnosticProblem &problem_;
  std::vector<Slot> slots_;
  std::vector<int> fault_slot_;
  std::map<std::pair<std::string, std::string>, int> output_slot_;
  std::map<std::pair<std::string, std::string>, std::pair<int, int>> input_feed_; // -> (slot, link)
  std::vector<CompiledRule> rules_;
};

std::vector<WeightedAtom> concat(std::vector<WeightedAtom> a, const std::vector<WeightedAtom> &b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

bool touches_present(const DiagnosticProblem &p, const Disorder &d) {
  if (d.kind != Disorder::Kind::signature) return false;
  return std::any_of(d.outputs.begin(), d.outputs.end(), [&](const StateLiteral &o) {
    return p.observations.present.count({d.component, o.output, o.state}) > 0;
  });
}

Degree coverage(const Network &net, const DiagnosticProblem &p, const Facts &facts) {
  Degree delta = Degree::one();
  for (const auto &[m, beta] : p.observations.present) delta = min_combine(delta, godel_implies(beta, net.at(facts, net.atom_of(m))));
  return delta;
}

bool derives_all(const Network &net, const Facts &facts, const Disorder &target) {
  return std::all_of(target.outputs.begin(), target.outputs.end(), [&](const StateLiteral &o) {
    return net.at(facts, net.atom_of({target.component, o.output, o.state})).positive();
  });
}

// Candidate disorders relevant to one manifestation.
void collect_candidates(const DiagnosticProblem &p, const RelevantSubtheory &rel, const DiagnoseOptions &opts,
                        std::set<Disorder> &out) {
  for (const auto &cid : rel.components) {
    const auto *c = p.model.find(cid);
    if (c->trusted) continue;
    for (const auto &f : c->fault_modes) out.insert(Disorder::fault(c->id, f));
  }
  std::map<std::string, std::vector<StateLiteral>> per_comp;
  for (const auto &s : rel.states) {
    if (p.model.find(s.component)->trusted) continue;
    out.insert(Disorder::signature(s.component, s.output, s.state));
    per_comp[s.component].push_back({s.output, s.state});
  }
  if (!opts.multi_output_signatures) return;
  for (const auto &[comp, lits] : per_comp) {
    // grow combinations over distinct outputs
    std::vector<std::vector<StateLiteral>> frontier;
    for (const auto &l : lits) frontier.push_back({l});
    for (std::size_t size = 2; size <= opts.max_signature_size; ++size) {
      std::vector<std::vector<StateLiteral>> grown;
      for (const auto &base : frontier)
        for (const auto &l : lits) {
          if (!(base.back() < l)) continue;
          if (std::any_of(base.begin(), base.end(), [&](const StateLiteral &b) { return b.output == l.output; }))
            continue;
          auto next = base;
          next.push_back(l);
          out.insert(Disorder::signature(comp, next));
          grown.push_back(std::move(next));
        }
      frontier = std::move(grown);
    }
  }
}

bool relevant_to(const DiagnosticProblem &p, const RelevantSubtheory &rel, const Disorder &d) {
  if (d.kind == Disorder::Kind::fault) return rel.components.count(d.component) > 0;
  (void)p;
  return std::all_of(d.outputs.begin(), d.outputs.end(), [&](const StateLiteral &o) {
    return rel.states.count({d.component, o.output, o.state}) > 0;
  });
}

int class_rank(PreferenceClass c) {
  switch (c) {
  case PreferenceClass::identified_fault: return 0;
  case PreferenceClass::upstream_signature: return 1;
  case PreferenceClass::signature: return 2;
  }
  return 2;
}

void require_symptoms(const DiagnosticProblem &p) {
  if (p.observations.present.empty()) throw DiagnosisError("nothing to explain");
}

} // namespace

RelevantSubtheory relevant_subtheory(const DiagnosticProblem &problem, const Manifestation &m) {
  return Network(problem).relevance(m);
}

std::set<std::size_t> relevant_links(const DiagnosticProblem &problem, const Manifestation &m) {
  return relevant_subtheory(problem, m).links;
}

std::set<std::string> relevant_comps(const DiagnosticProblem &problem, const Manifestation &m) {
  return relevant_subtheory(problem, m).components;
}

Degree entailment_weight(const DiagnosticProblem &problem, const Disorder &d, const Manifestation &m) {
  Network net(problem);
  return net.at(net.derive(net.seeds_of(d)), net.atom_of(m));
}

Degree exclusion_weight(const DiagnosticProblem &problem, const Disorder &d, const Manifestation &m) {
  Network net(problem);
  return net.exclusion(net.derive(net.seeds_of(d)), net.atom_of(m));
}

Degree self_inconsistency(const DiagnosticProblem &problem, const Disorder &d) {
  Network net(problem);
  return net.inconsistency(net.derive(net.seeds_of(d)), {});
}

Degree consistency_degree(const DiagnosticProblem &problem, const Disorder &d) {
  Network net(problem);
  const auto facts = net.derive(concat(net.seeds_of(d), net.present_seeds()));
  return complement(net.inconsistency(facts, net.absent_clauses()));
}

Degree abductive_degree(const DiagnosticProblem &problem, const Disorder &d) {
  require_symptoms(problem);
  Network net(problem);
  return coverage(net, problem, net.derive(net.seeds_of(d)));
}

std::vector<Disorder> enumerate_candidates(const DiagnosticProblem &problem, const DiagnoseOptions &opts) {
  require_symptoms(problem);
  Network net(problem);
  std::vector<RelevantSubtheory> rels;
  for (const auto &[m, beta] : problem.observations.present) rels.push_back(net.relevance(m));
  std::set<Disorder> pool;
  collect_candidates(problem, rels.front(), opts, pool);
  std::vector<Disorder> out;
  for (const auto &d : pool) {
    if (touches_present(problem, d)) continue;
    if (std::all_of(rels.begin(), rels.end(), [&](const auto &r) { return relevant_to(problem, r, d); }))
      out.push_back(d);
  }
  return out;
}

std::vector<Hypothesis> diagnose(const DiagnosticProblem &problem, const DiagnoseOptions &opts) {
  require_symptoms(problem);
  Network net(problem);
  std::vector<RelevantSubtheory> rels;
  std::set<Disorder> pool;
  for (const auto &[m, beta] : problem.observations.present) {
    rels.push_back(net.relevance(m));
    collect_candidates(problem, rels.back(), opts, pool);
  }

  const auto present = net.present_seeds();
  const auto absent = net.absent_clauses();
  std::vector<Hypothesis> hyps;
  std::vector<Facts> own_facts;
  for (const auto &d : pool) {
    if (touches_present(problem, d)) continue;
    Hypothesis h;
    h.disorder = d;
    const auto seeds = net.seeds_of(d);
    auto facts = net.derive(seeds);
    const bool clean_with_absent = net.inconsistency(facts, absent).is_zero();
    h.abductive_degree = clean_with_absent ? coverage(net, problem, facts) : Degree::zero();
    h.consistency_degree = complement(net.inconsistency(net.derive(concat(seeds, present)), absent));
    h.relevant = std::all_of(rels.begin(), rels.end(), [&](const auto &r) { return relevant_to(problem, r, d); });
    h.status = (h.consistency_degree.is_zero() || !h.relevant) ? HypothesisStatus::discarded : HypothesisStatus::active;
    hyps.push_back(std::move(h));
    own_facts.push_back(std::move(facts));
  }

  for (std::size_t i = 0; i < hyps.size(); ++i) {
    auto &h = hyps[i];
    if (h.disorder.kind == Disorder::Kind::fault) {
      h.preference_class = PreferenceClass::identified_fault;
      continue;
    }
    bool dominated = false;
    for (std::size_t j = 0; j < hyps.size() && !dominated; ++j) {
      const auto &o = hyps[j];
      if (i == j || !o.active() || o.disorder.kind != Disorder::Kind::signature) continue;
      dominated = derives_all(net, own_facts[j], h.disorder) && !derives_all(net, own_facts[i], o.disorder);
    }
    h.preference_class = dominated ? PreferenceClass::signature : PreferenceClass::upstream_signature;
  }

  std::sort(hyps.begin(), hyps.end(), [](const Hypothesis &a, const Hypothesis &b) {
    if (a.abductive_degree != b.abductive_degree) return b.abductive_degree < a.abductive_degree;
    if (a.consistency_degree != b.consistency_degree) return b.consistency_degree < a.consistency_degree;
    if (a.preference_class != b.preference_class) return class_rank(a.preference_class) < class_rank(b.preference_class);
    if (a.disorder.outputs.size() != b.disorder.outputs.size()) return a.disorder.outputs.size() < b.disorder.outputs.size();
    return a.disorder.id() < b.disorder.id();
  });
  return hyps;
}

bool dominates(const DiagnosticProblem &problem, const Disorder &d1, const Disorder &d2) {
  if (d1.kind != Disorder::Kind::signature || d2.kind != Disorder::Kind::signature)
    throw DiagnosisError("dominance is defined between signature disorders only");
  if (d1 == d2) return false;
  Network net(problem);
  return derives_all(net, net.derive(net.seeds_of(d1)), d2) && !derives_all(net, net.derive(net.seeds_of(d2)), d1);
}

namespace {

std::vector<ExpectedManifestation> expectations_from(const Network &net, const DiagnosticProblem &p, const Facts &facts) {
  std::set<std::pair<std::string, std::string>> settled; // outputs whose value has been seen
  for (const auto &[m, beta] : p.observations.present) settled.insert({m.component, m.output});
  std::vector<ExpectedManifestation> out;
  for (const auto &[key, slot] : net.output_slots()) {
    if (!net.slots()[slot].observable || settled.count(key)) continue;
    for (std::size_t st = 0; st < net.slots()[slot].states.size(); ++st) {
      const Atom a{slot, static_cast<int>(st)};
      const auto m = net.manifestation_of(a);
      if (p.observations.present.count(m) || p.observations.absent.count(m)) continue;
      if (const auto e = net.at(facts, a); e.positive()) out.push_back({m, Expectation::present, e});
      if (const auto x = net.exclusion(facts, a); x.positive()) out.push_back({m, Expectation::absent, x});
    }
  }
  std::sort(out.begin(), out.end(), [](const auto &a, const auto &b) {
    return std::tie(a.manifestation, a.expectation) < std::tie(b.manifestation, b.expectation);
  });
  return out;
}

} // namespace

std::vector<ExpectedManifestation> expected_manifestations(const DiagnosticProblem &problem, const Disorder &d) {
  Network net(problem);
  return expectations_from(net, problem, net.derive(net.seeds_of(d)));
}

std::vector<ProbeSuggestion> suggest_probes(const DiagnosticProblem &problem, const std::vector<Hypothesis> &hypotheses) {
  Network net(problem);
  std::vector<const Hypothesis *> active;
  std::vector<Facts> facts;
  std::set<Manifestation> probes;
  for (const auto &h : hypotheses) {
    if (!h.active()) continue;
    active.push_back(&h);
    facts.push_back(net.derive(net.seeds_of(h.disorder)));
    for (const auto &e : expectations_from(net, problem, facts.back())) probes.insert(e.manifestation);
  }

  std::vector<ProbeSuggestion> out;
  for (const auto &m : probes) {
    ProbeSuggestion ps;
    ps.manifestation = m;
    const Atom a = net.atom_of(m);
    for (std::size_t i = 0; i < active.size(); ++i) {
      const auto e = net.at(facts[i], a);
      const auto x = net.exclusion(facts[i], a);
      HypothesisExpectation he{active[i]->disorder.id(), Expectation::none, Degree::zero()};
      if (e.positive() && x <= e) {
        he.expectation = Expectation::present;
        he.degree = e;
      } else if (x.positive()) {
        he.expectation = Expectation::absent;
        he.degree = x;
      }
      ps.max_degree = max_combine(ps.max_degree, he.degree);
      ps.expectations.push_back(std::move(he));
    }
    for (std::size_t i = 0; i < ps.expectations.size(); ++i)
      for (std::size_t j = i + 1; j < ps.expectations.size(); ++j) {
        const auto &x = ps.expectations[i];
        const auto &y = ps.expectations[j];
        if (x.expectation != y.expectation || x.degree != y.degree) ++ps.discrimination_score;
      }
    out.push_back(std::move(ps));
  }
  std::stable_sort(out.begin(), out.end(), [](const ProbeSuggestion &a, const ProbeSuggestion &b) {
    if (a.discrimination_score != b.discrimination_score) return a.discrimination_score > b.discrimination_score;
    if (a.max_degree != b.max_degree) return b.max_degree < a.max_degree;
    return a.manifestation.to_string() < b.manifestation.to_string();
  });
  return out;
}

} // namespace possdiag
