#include "possdiag/model.hpp"

#include <algorithm>
#include <functional>
#include <tuple>

namespace possdiag {

namespace {

template <class Range, class Key>
auto find_by_id(const Range &r, const Key &id) -> decltype(&*r.begin()) {
  for (const auto &x : r)
    if (x.id == id) return &x;
  return nullptr;
}

bool contains(const std::vector<std::string> &v, std::string_view s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

} // namespace

const ParamDecl *Component::find_input(std::string_view id) const { return find_by_id(inputs, id); }
const ParamDecl *Component::find_output(std::string_view id) const { return find_by_id(outputs, id); }
bool Component::has_fault(std::string_view f) const { return contains(fault_modes, f); }
bool Component::has_config(std::string_view m) const { return contains(config_modes, m); }

const Component *SystemModel::find(std::string_view id) const { return find_by_id(components, id); }

std::optional<std::size_t> SystemModel::index_of(std::string_view id) const {
  for (std::size_t i = 0; i < components.size(); ++i)
    if (components[i].id == id) return i;
  return std::nullopt;
}

std::string Manifestation::to_string() const { return component + "." + output + "(" + state + ")"; }

Disorder Disorder::fault(std::string component, std::string mode) {
  Disorder d;
  d.kind = Kind::fault;
  d.component = std::move(component);
  d.fault_mode = std::move(mode);
  return d;
}

Disorder Disorder::signature(std::string component, std::vector<StateLiteral> outputs) {
  Disorder d;
  d.kind = Kind::signature;
  d.component = std::move(component);
  std::sort(outputs.begin(), outputs.end());
  d.outputs = std::move(outputs);
  return d;
}

Disorder Disorder::signature(std::string component, std::string output, std::string state) {
  return signature(std::move(component), {{std::move(output), std::move(state)}});
}

std::string Disorder::id() const {
  if (kind == Kind::fault) return component + "[" + fault_mode + "]";
  if (outputs.size() == 1) return component + "." + outputs[0].output + "(" + outputs[0].state + ")";
  std::string s = component + "{";
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    if (i) s += ",";
    s += outputs[i].output + "(" + outputs[i].state + ")";
  }
  return s + "}";
}

bool has_errors(const ValidationReport &report) {
  return std::any_of(report.begin(), report.end(),
                     [](const Violation &v) { return v.severity == Severity::error; });
}

namespace {

class Validator {
public:
  explicit Validator(const SystemModel &m) : model_(m) {}

  ValidationReport run() {
    std::set<std::string> ids;
    for (const auto &c : model_.components) {
      if (!ids.insert(c.id).second) error(c.id, "duplicate component '" + c.id + "'", c.span);
      check_component(c);
    }
    check_links();
    check_cycles();
    return std::move(report_);
  }

private:
  void error(const std::string &comp, std::string msg, const SourceSpan &span) {
    report_.push_back({Severity::error, comp, std::move(msg), span});
  }
  void warning(const std::string &comp, std::string msg, const SourceSpan &span) {
    report_.push_back({Severity::warning, comp, std::move(msg), span});
  }

  void check_param(const Component &c, const ParamDecl &p) {
    if (p.states.empty()) error(c.id, "parameter '" + p.id + "' declares no abnormal state", p.span);
    std::set<std::string> seen;
    for (const auto &s : p.states) {
      if (!seen.insert(s).second)
        error(c.id, "parameter '" + p.id + "' repeats state '" + s + "'", p.span);
      if (s == "NOMINAL")
        error(c.id, "parameter '" + p.id + "' names the implicit NOMINAL state", p.span);
    }
  }

  void check_component(const Component &c) {
    std::set<std::string> params;
    for (const auto &p : c.inputs) {
      if (!params.insert(p.id).second) error(c.id, "duplicate parameter '" + p.id + "'", p.span);
      if (p.observable) error(c.id, "input '" + p.id + "' cannot be observable", p.span);
      check_param(c, p);
    }
    for (const auto &p : c.outputs) {
      if (!params.insert(p.id).second) error(c.id, "duplicate parameter '" + p.id + "'", p.span);
      check_param(c, p);
    }
    std::set<std::string> modes;
    for (const auto &m : c.config_modes)
      if (!modes.insert(m).second) error(c.id, "duplicate config mode '" + m + "'", c.span);
    std::set<std::string> faults;
    for (const auto &f : c.fault_modes)
      if (!faults.insert(f).second) error(c.id, "duplicate fault mode '" + f + "'", c.span);
    if (c.trusted && !c.fault_modes.empty())
      error(c.id, "trusted component declares fault modes", c.span);

    for (const auto &r : c.rules) check_rule(c, r);
    check_coherence(c);
  }

  void check_rule(const Component &c, const BehaviorRule &r) {
    if (r.config && !c.has_config(*r.config))
      error(c.id, "rule uses undeclared config mode '" + *r.config + "'", r.span);
    if (r.antecedent.empty()) error(c.id, "rule has no input or fault literal", r.span);
    for (const auto &l : r.antecedent) {
      if (l.kind == LiteralKind::fault_mode) {
        if (!c.has_fault(l.value)) error(c.id, "rule uses undeclared fault mode '" + l.value + "'", r.span);
        continue;
      }
      const auto *in = c.find_input(l.param);
      if (!in) {
        error(c.id, "rule uses undeclared input '" + l.param + "'", r.span);
      } else if (!contains(in->states, l.value)) {
        error(c.id,
              "state '" + l.value + "' is not declared by input '" + l.param + "' (declared at line " +
                  std::to_string(in->span.line) + ")",
              r.span);
      }
    }
    const auto *out = c.find_output(r.output);
    if (!out) {
      error(c.id, "rule concludes on undeclared output '" + r.output + "'", r.span);
    } else if (!contains(out->states, r.state)) {
      error(c.id,
            "state '" + r.state + "' is not declared by output '" + r.output + "' (declared at line " +
                std::to_string(out->span.line) + ")",
            r.span);
    }
    if (!r.certainty.positive()) error(c.id, "rule certainty must be positive", r.span);
    if (!model_.scale.contains(r.certainty))
      error(c.id, "rule certainty " + r.certainty.to_string() + " is not on the scale", r.span);
  }

  // No antecedent may both entail and exclude the same output state.
  void check_coherence(const Component &c) {
    using Key = std::tuple<std::optional<std::string>, std::vector<Literal>, std::string, std::string>;
    std::map<Key, std::pair<bool, bool>> seen;
    for (const auto &r : c.rules) {
      auto ante = r.antecedent;
      std::sort(ante.begin(), ante.end());
      auto &[ent, exc] = seen[Key{r.config, ante, r.output, r.state}];
      (r.polarity == Polarity::entails ? ent : exc) = true;
      if (ent && exc)
        error(c.id, "incoherent rules: the same antecedent entails and excludes " + r.output + "=" + r.state,
              r.span);
    }
  }

  void check_links() {
    std::map<Endpoint, const Link *> fed;
    for (const auto &l : model_.links) {
      const auto *src = model_.find(l.source.component);
      const ParamDecl *out = src ? src->find_output(l.source.param) : nullptr;
      if (!src) error(l.source.component, "link from unknown component '" + l.source.component + "'", l.span);
      else if (!out) error(src->id, "link from undeclared output '" + l.source.param + "'", l.span);
      if (l.targets.empty()) error(l.source.component, "link has no target", l.span);
      for (const auto &t : l.targets) {
        const auto *dst = model_.find(t.component);
        const ParamDecl *in = dst ? dst->find_input(t.param) : nullptr;
        if (!dst) {
          error(t.component, "link to unknown component '" + t.component + "'", l.span);
          continue;
        }
        if (!in) {
          error(dst->id, "link to undeclared input '" + t.param + "'", l.span);
          continue;
        }
        if (!fed.emplace(t, &l).second)
          error(dst->id, "input " + t.component + "." + t.param + " is the target of more than one link",
                l.span);
        if (out) {
          auto a = out->states, b = in->states;
          std::sort(a.begin(), a.end());
          std::sort(b.begin(), b.end());
          if (a != b)
            error(dst->id,
                  "link " + l.source.component + "." + l.source.param + " -> " + t.component + "." +
                      t.param + " joins parameters with different state sets",
                  l.span);
        }
      }
    }
  }

  void check_cycles() {
    const auto n = model_.components.size();
    std::vector<std::set<std::size_t>> succ(n);
    for (const auto &l : model_.links) {
      auto s = model_.index_of(l.source.component);
      if (!s) continue;
      for (const auto &t : l.targets)
        if (auto d = model_.index_of(t.component)) succ[*s].insert(*d);
    }
    std::vector<int> colour(n, 0);
    std::function<bool(std::size_t)> visit = [&](std::size_t v) {
      colour[v] = 1;
      for (auto w : succ[v]) {
        if (colour[w] == 1) return true;
        if (colour[w] == 0 && visit(w)) return true;
      }
      colour[v] = 2;
      return false;
    };
    for (std::size_t v = 0; v < n; ++v) {
      if (colour[v] == 0 && visit(v)) {
        warning(model_.components[v].id, "link graph contains a cycle through '" + model_.components[v].id + "'",
                model_.components[v].span);
        return;
      }
    }
  }

  const SystemModel &model_;
  ValidationReport report_;
};

} // namespace

ValidationReport validate_model(const SystemModel &model) { return Validator(model).run(); }

void check_manifestation(const SystemModel &model, const Manifestation &m) {
  const auto *c = model.find(m.component);
  if (!c) throw ModelError("unknown component '" + m.component + "'");
  const auto *out = c->find_output(m.output);
  if (!out) throw ModelError("component '" + m.component + "' has no output '" + m.output + "'");
  if (!out->observable) throw ModelError("output " + m.component + "." + m.output + " is not observable");
  if (!contains(out->states, m.state))
    throw ModelError("output " + m.component + "." + m.output + " has no state '" + m.state + "'");
}

DiagnosticProblem compose_problem(SystemModel model, Context context, Observations observations) {
  const auto report = validate_model(model);
  for (const auto &v : report)
    if (v.severity == Severity::error) throw ModelError("invalid model: " + v.component + ": " + v.message);

  for (const auto &[comp, mode] : context.assignments) {
    const auto *c = model.find(comp);
    if (!c) throw ModelError("context names unknown component '" + comp + "'");
    if (!c->has_config(mode)) throw ModelError("unknown config mode '" + mode + "' for component '" + comp + "'");
  }
  for (const auto &c : model.components)
    if (!c.config_modes.empty() && !context.assignments.count(c.id))
      throw ModelError("context assigns no config mode to component '" + c.id + "'");

  for (const auto *set : {&observations.present, &observations.absent}) {
    for (const auto &[m, deg] : *set) {
      check_manifestation(model, m);
      if (!deg.positive()) throw ModelError("observation " + m.to_string() + " has degree 0");
      if (!model.scale.contains(deg))
        throw ModelError("observation " + m.to_string() + " has an off-scale degree");
    }
  }
  for (const auto &[m, deg] : observations.present)
    if (observations.absent.count(m))
      throw ModelError("manifestation " + m.to_string() + " is observed both present and absent");

  DiagnosticProblem p;
  p.rule_active.reserve(model.components.size());
  for (const auto &c : model.components) {
    std::vector<bool> act;
    act.reserve(c.rules.size());
    for (const auto &r : c.rules)
      act.push_back(!r.config || context.assignments.at(c.id) == *r.config);
    p.rule_active.push_back(std::move(act));
  }
  p.model = std::move(model);
  p.context = std::move(context);
  p.observations = std::move(observations);
  return p;
}

std::set<Endpoint> observable_outputs(const SystemModel &model) {
  std::set<Endpoint> out;
  for (const auto &c : model.components)
    for (const auto &o : c.outputs)
      if (o.observable) out.insert({c.id, o.id});
  return out;
}

} // namespace possdiag
