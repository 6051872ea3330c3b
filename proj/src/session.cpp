#include "possdiag/session.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <iomanip>
#include <sstream>

namespace possdiag {

using nlohmann::json;

namespace {

constexpr int journal_format = 1;

std::string diagnostics_text(const std::vector<Diagnostic> &ds) {
  std::string out;
  for (const auto &d : ds) {
    if (!out.empty()) out += "\n";
    out += d.to_string();
  }
  return out;
}

const char *polarity_name(ObsPolarity p) { return p == ObsPolarity::present ? "present" : "absent"; }

ObsPolarity parse_polarity(const std::string &s) {
  if (s == "present") return ObsPolarity::present;
  if (s == "absent") return ObsPolarity::absent;
  throw SessionError("polarity must be 'present' or 'absent', not '" + s + "'");
}

json manifestation_json(const Manifestation &m) {
  return {{"component", m.component}, {"output", m.output}, {"state", m.state}, {"id", m.to_string()}};
}

json disorder_json(const Disorder &d) {
  json j{{"id", d.id()}, {"component", d.component}};
  if (d.kind == Disorder::Kind::fault) {
    j["kind"] = "fault";
    j["fault_mode"] = d.fault_mode;
  } else {
    j["kind"] = "signature";
    j["outputs"] = json::array();
    for (const auto &o : d.outputs) j["outputs"].push_back({{"output", o.output}, {"state", o.state}});
  }
  return j;
}

} // namespace

std::string sha256_hex(const std::string &data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

ObservationEntry make_observation(const SystemModel &model, const std::string &component, const std::string &output,
                                  const std::string &state, ObsPolarity polarity, const std::string &level) {
  ObservationEntry e;
  e.manifestation = {component, output, state};
  e.polarity = polarity;
  try {
    check_manifestation(model, e.manifestation);
  } catch (const ModelError &err) {
    throw SessionError(err.what());
  }
  if (auto d = model.scale.find(level)) {
    e.degree = *d;
  } else if (auto a = model.scale.find_absence(level); a && polarity == ObsPolarity::present) {
    e.polarity = ObsPolarity::absent;
    e.degree = *a;
  } else {
    throw SessionError("unknown level '" + level + "'");
  }
  if (!e.degree.positive()) throw SessionError("observation degree must be positive");
  return e;
}

std::string describe_observation(const Scale &scale, const ObservationEntry &e) {
  const auto &m = e.manifestation;
  return m.component + "." + m.output + (e.polarity == ObsPolarity::present ? " = " : " != ") + m.state + " " +
         scale.name_of(e.degree);
}

json degree_json(const Scale &scale, const Degree &d) {
  json j{{"numerator", d.numerator()}, {"denominator", d.denominator()}};
  j["name"] = scale.contains(d) ? json(scale.name_of(d)) : json(nullptr);
  return j;
}

json probes_json(const Scale &scale, const std::vector<ProbeSuggestion> &probes) {
  json arr = json::array();
  for (const auto &p : probes) {
    json row{{"manifestation", manifestation_json(p.manifestation)},
             {"score", p.discrimination_score},
             {"max_degree", degree_json(scale, p.max_degree)}};
    row["expectations"] = json::array();
    for (const auto &e : p.expectations)
      row["expectations"].push_back(
          {{"hypothesis", e.hypothesis}, {"expectation", to_string(e.expectation)}, {"degree", degree_json(scale, e.degree)}});
    arr.push_back(std::move(row));
  }
  return arr;
}

json board_json(const Scale &scale, const Board &board) {
  json j{{"revision", board.revision}};
  j["hypotheses"] = json::array();
  for (const auto &e : board.entries) {
    const auto &h = e.hypothesis;
    json row{{"disorder", disorder_json(h.disorder)},
             {"id", h.disorder.id()},
             {"abductive_degree", degree_json(scale, h.abductive_degree)},
             {"consistency_degree", degree_json(scale, h.consistency_degree)},
             {"relevant", h.relevant},
             {"abductive", h.abductive()},
             {"class", to_string(h.preference_class)},
             {"status", to_string(h.status)},
             {"discarded_by", e.discarded_by ? json(*e.discarded_by) : json(nullptr)}};
    row["verdict"] = e.verdict ? json{{"verdict", e.verdict->verdict}, {"note", e.verdict->note}} : json(nullptr);
    row["expected"] = json::array();
    for (const auto &x : e.expected)
      row["expected"].push_back({{"manifestation", manifestation_json(x.manifestation)},
                                 {"expectation", to_string(x.expectation)},
                                 {"degree", degree_json(scale, x.degree)}});
    j["hypotheses"].push_back(std::move(row));
  }
  j["probes"] = probes_json(scale, board.probes);
  return j;
}

json topology_json(const std::string &name, const SystemModel &model) {
  auto params = [](const std::vector<ParamDecl> &ps) {
    json arr = json::array();
    for (const auto &p : ps) {
      const char *kind = p.kind == ParamKind::analog ? "analog" : p.kind == ParamKind::digital ? "digital" : "custom";
      arr.push_back({{"id", p.id}, {"kind", kind}, {"states", p.states}, {"observable", p.observable}});
    }
    return arr;
  };
  json j{{"name", name}};
  j["components"] = json::array();
  for (const auto &c : model.components)
    j["components"].push_back({{"id", c.id},
                               {"trusted", c.trusted},
                               {"inputs", params(c.inputs)},
                               {"outputs", params(c.outputs)},
                               {"config_modes", c.config_modes},
                               {"fault_modes", c.fault_modes}});
  j["links"] = json::array();
  for (const auto &l : model.links) {
    json targets = json::array();
    for (const auto &t : l.targets) targets.push_back({{"component", t.component}, {"param", t.param}});
    j["links"].push_back({{"source", {{"component", l.source.component}, {"param", l.source.param}}}, {"targets", targets}});
  }
  return j;
}

Session Session::create(const std::string &model_text, const std::string &obs_text, std::string id, JournalSink sink) {
  auto parsed = parse_model(model_text, "model");
  if (!parsed.ok()) throw SessionError("model does not parse:\n" + diagnostics_text(parsed.errors), parsed.errors);
  auto obs = parse_observations(obs_text, *parsed.model, "observations");
  if (!obs.ok()) throw SessionError("observations do not parse:\n" + diagnostics_text(obs.errors), obs.errors);

  Session s;
  s.id_ = std::move(id);
  s.model_text_ = model_text;
  s.obs_text_ = obs_text;
  s.sink_ = std::move(sink);
  try {
    s.problem_ = compose_problem(std::move(*parsed.model), std::move(obs.context), std::move(obs.observations));
    s.board_ = s.rank(s.problem_, 0, nullptr, {});
  } catch (const ModelError &e) {
    throw SessionError(e.what());
  } catch (const DiagnosisError &e) {
    throw SessionError(e.what());
  }
  s.append({{"event", "session"},
            {"format", journal_format},
            {"session_id", s.id_},
            {"model_sha256", sha256_hex(model_text)},
            {"model", model_text},
            {"observations", obs_text}});
  s.snapshot();
  return s;
}

std::optional<Observations> Session::extended(const ObservationEntry &e) const {
  const auto &obs = problem_.observations;
  const auto &same = e.polarity == ObsPolarity::present ? obs.present : obs.absent;
  const auto &other = e.polarity == ObsPolarity::present ? obs.absent : obs.present;
  const auto what = e.manifestation.to_string();
  if (other.count(e.manifestation))
    throw ConflictError(what + " is already observed " + polarity_name(e.polarity == ObsPolarity::present
                                                                           ? ObsPolarity::absent
                                                                           : ObsPolarity::present));
  if (auto it = same.find(e.manifestation); it != same.end()) {
    if (it->second == e.degree) return std::nullopt;
    throw ConflictError(what + " is already observed " + polarity_name(e.polarity) + " with degree " +
                        scale().name_of(it->second));
  }
  if (e.polarity == ObsPolarity::present)
    for (const auto &[m, b] : obs.present)
      if (m.component == e.manifestation.component && m.output == e.manifestation.output)
        throw ConflictError(what + " contradicts " + m.to_string() + ", already observed present");
  try {
    check_manifestation(problem_.model, e.manifestation);
  } catch (const ModelError &err) {
    throw SessionError(err.what());
  }
  Observations next = obs;
  (e.polarity == ObsPolarity::present ? next.present : next.absent)[e.manifestation] = e.degree;
  return next;
}

Board Session::rank(const DiagnosticProblem &p, std::int64_t revision, const Board *previous,
                    const std::string &cause) const {
  Board b;
  b.revision = revision;
  const auto hyps = diagnose(p);
  for (const auto &h : hyps) {
    BoardEntry e;
    e.hypothesis = h;
    e.expected = expected_manifestations(p, h.disorder);
    if (auto v = verdicts_.find(h.disorder.id()); v != verdicts_.end()) e.verdict = v->second;
    b.entries.push_back(std::move(e));
  }
  if (!previous) {
    for (auto &e : b.entries)
      if (!e.hypothesis.active()) e.discarded_by = "initial observations";
  } else {
    std::map<std::string, const BoardEntry *> old;
    for (const auto &e : previous->entries) old[e.hypothesis.disorder.id()] = &e;
    for (auto &e : b.entries) {
      auto it = old.find(e.hypothesis.disorder.id());
      if (it == old.end()) {
        if (!e.hypothesis.active()) e.discarded_by = cause;
        continue;
      }
      if (it->second->discarded_by) e.discarded_by = it->second->discarded_by;
      else if (!e.hypothesis.active() && it->second->hypothesis.active()) e.discarded_by = cause;
    }
    // hypotheses that left the candidate space stay on the board, discarded
    std::set<std::string> now;
    for (const auto &e : b.entries) now.insert(e.hypothesis.disorder.id());
    for (const auto &e : previous->entries) {
      if (now.count(e.hypothesis.disorder.id())) continue;
      BoardEntry kept = e;
      kept.hypothesis.status = HypothesisStatus::discarded;
      kept.hypothesis.abductive_degree = Degree::zero();
      if (!kept.discarded_by) kept.discarded_by = cause;
      kept.expected = expected_manifestations(p, e.hypothesis.disorder);
      b.entries.push_back(std::move(kept));
    }
  }
  b.probes = suggest_probes(p, hyps);
  return b;
}

bool Session::add_observation(const ObservationEntry &e) {
  auto next = extended(e);
  if (!next) return false;
  DiagnosticProblem p = problem_;
  p.observations = std::move(*next);
  Board b = rank(p, board_.revision + 1, &board_, describe_observation(scale(), e));
  append({{"event", "observation"},
          {"component", e.manifestation.component},
          {"output", e.manifestation.output},
          {"state", e.manifestation.state},
          {"polarity", polarity_name(e.polarity)},
          {"level", scale().name_of(e.degree)}});
  problem_ = std::move(p);
  board_ = std::move(b);
  snapshot();
  return true;
}

Board Session::what_if(const ObservationEntry &e) const {
  auto next = extended(e);
  if (!next) return board_;
  DiagnosticProblem p = problem_;
  p.observations = std::move(*next);
  return rank(p, board_.revision, &board_, describe_observation(scale(), e));
}

void Session::add_verdict(const std::string &hypothesis, const std::string &verdict, const std::string &note) {
  if (verdict != "rejected" && verdict != "cleared")
    throw SessionError("verdict must be 'rejected' or 'cleared', not '" + verdict + "'");
  auto it = std::find_if(board_.entries.begin(), board_.entries.end(),
                         [&](const BoardEntry &e) { return e.hypothesis.disorder.id() == hypothesis; });
  if (it == board_.entries.end()) throw SessionError("no hypothesis '" + hypothesis + "' on the board");
  append({{"event", "verdict"}, {"hypothesis", hypothesis}, {"verdict", verdict}, {"note", note}});
  if (verdict == "cleared") {
    verdicts_.erase(hypothesis);
    it->verdict.reset();
  } else {
    verdicts_[hypothesis] = {verdict, note};
    it->verdict = verdicts_[hypothesis];
  }
}

void Session::append(const json &event) {
  auto line = event.dump();
  if (sink_) sink_(line);
  journal_.push_back(std::move(line));
}

void Session::snapshot() {
  auto digest = sha256_hex(board_json(scale(), board_).dump());
  append({{"event", "snapshot"}, {"revision", board_.revision}, {"board_sha256", digest}});
  digests_.push_back(std::move(digest));
}

std::string Session::journal_text() const {
  std::string out;
  for (const auto &l : journal_) out += l + "\n";
  return out;
}

Session Session::replay(const std::string &journal_text, JournalSink sink) {
  std::vector<json> events;
  std::istringstream in(journal_text);
  std::string line;
  std::size_t lineno = 0;
  auto last_valid = [&]() -> std::string {
    if (events.empty()) return "no valid event";
    return "last valid event is #" + std::to_string(events.size() - 1) + " (" +
           events.back().value("event", std::string("?")) + ")";
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = json::parse(line);
      if (!j.is_object() || !j.contains("event") || !j["event"].is_string())
        throw SessionError("journal line " + std::to_string(lineno) + " is not an event; " + last_valid());
      events.push_back(std::move(j));
    } catch (const json::parse_error &) {
      throw SessionError("journal line " + std::to_string(lineno) + " is corrupt; " + last_valid());
    }
  }
  if (events.empty()) throw SessionError("journal is empty");

  const auto &head = events.front();
  if (head["event"] != "session") throw SessionError("journal does not start with a session event");
  if (head.value("format", 0) != journal_format)
    throw SessionError("unsupported journal format " + head.value("format", json(0)).dump());
  const auto model = head.value("model", std::string());
  if (sha256_hex(model) != head.value("model_sha256", std::string()))
    throw SessionError("model text does not match its recorded hash");

  Session s = create(model, head.value("observations", std::string()), head.value("session_id", std::string("local")));
  s.journal_.clear();
  s.digests_.clear();
  s.journal_.push_back(head.dump());

  for (std::size_t i = 1; i < events.size(); ++i) {
    const auto &ev = events[i];
    const auto type = ev["event"].get<std::string>();
    const auto where = "event #" + std::to_string(i) + " (" + type + ")";
    auto fail = [&](const std::string &why) -> SessionError {
      return SessionError(where + ": " + why + "; last valid event is #" + std::to_string(i - 1));
    };
    try {
      if (type == "snapshot") {
        const auto digest = sha256_hex(board_json(s.scale(), s.board_).dump());
        if (ev.value("revision", std::int64_t{-1}) != s.board_.revision) throw fail("revision mismatch");
        if (ev.value("board_sha256", std::string()) != digest) throw fail("board differs from the recorded one");
        s.journal_.push_back(ev.dump());
        s.digests_.push_back(digest);
      } else if (type == "observation") {
        const auto e = make_observation(s.problem_.model, ev.at("component"), ev.at("output"), ev.at("state"),
                                        parse_polarity(ev.at("polarity")), ev.at("level"));
        auto next = s.extended(e);
        if (!next) throw fail("observation is already recorded");
        DiagnosticProblem p = s.problem_;
        p.observations = std::move(*next);
        s.board_ = s.rank(p, s.board_.revision + 1, &s.board_, describe_observation(s.scale(), e));
        s.problem_ = std::move(p);
        s.journal_.push_back(ev.dump());
      } else if (type == "verdict") {
        s.add_verdict(ev.at("hypothesis"), ev.at("verdict"), ev.value("note", std::string()));
      } else if (type == "session") {
        throw fail("second session header");
      } else {
        throw SessionError("unknown event type '" + type + "' at event index " + std::to_string(i));
      }
    } catch (const json::exception &e) {
      throw fail(std::string("malformed event: ") + e.what());
    } catch (const SessionError &) {
      throw;
    }
  }
  s.sink_ = std::move(sink);
  return s;
}

} // namespace possdiag
