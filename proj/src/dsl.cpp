#include "possdiag/dsl.hpp"

#include <cctype>
#include <sstream>

namespace possdiag {

std::string Diagnostic::to_string() const {
  return span.file + ":" + std::to_string(span.line) + ":" + std::to_string(span.column) + ": " + message;
}

namespace {

enum class Tok {
  ident,
  number,
  lbrace,
  rbrace,
  lbracket,
  rbracket,
  semi,
  colon,
  comma,
  dot,
  eq,
  neq,
  entails,
  excludes,
  arrow,
  amp,
  end,
};

struct Token {
  Tok kind = Tok::end;
  std::string text;
  int line = 1;
  int column = 1;
  bool newline_before = false;
};

std::string describe(const Token &t) {
  if (t.kind == Tok::end) return "end of input";
  return "'" + t.text + "'";
}

class Lexer {
public:
  Lexer(std::string_view src, std::string file, std::vector<Diagnostic> &diags)
      : src_(src), file_(std::move(file)), diags_(diags) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    bool newline = true;
    while (true) {
      newline |= skip_blank();
      Token t;
      t.line = line_;
      t.column = col_;
      t.newline_before = newline;
      newline = false;
      if (pos_ >= src_.size()) {
        t.kind = Tok::end;
        out.push_back(t);
        return out;
      }
      const char c = src_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
          t.text.push_back(advance());
        t.kind = Tok::ident;
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        lex_number(t);
      } else if (!lex_symbol(t)) {
        diags_.push_back({{file_, t.line, t.column}, std::string("unexpected character '") + c + "'"});
        advance();
        newline = t.newline_before;
        continue;
      }
      out.push_back(std::move(t));
    }
  }

private:
  char advance() {
    const char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  // Returns true when a line break was crossed.
  bool skip_blank() {
    bool nl = false;
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '\n') {
        nl = true;
        advance();
      } else if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
    return nl;
  }

  void lex_number(Token &t) {
    auto digits = [&] {
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) t.text.push_back(advance());
    };
    digits();
    if (pos_ + 1 < src_.size() && (src_[pos_] == '/' || src_[pos_] == '.') &&
        std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]))) {
      t.text.push_back(advance());
      digits();
    }
    t.kind = Tok::number;
  }

  bool lex_symbol(Token &t) {
    auto rest = src_.substr(pos_);
    auto take = [&](Tok k, std::size_t n) {
      t.kind = k;
      for (std::size_t i = 0; i < n; ++i) t.text.push_back(advance());
      return true;
    };
    if (rest.starts_with("=/>")) return take(Tok::excludes, 3);
    if (rest.starts_with("=>")) return take(Tok::entails, 2);
    if (rest.starts_with("!=")) return take(Tok::neq, 2);
    if (rest.starts_with("->")) return take(Tok::arrow, 2);
    switch (rest[0]) {
    case '{': return take(Tok::lbrace, 1);
    case '}': return take(Tok::rbrace, 1);
    case '[': return take(Tok::lbracket, 1);
    case ']': return take(Tok::rbracket, 1);
    case ';': return take(Tok::semi, 1);
    case ':': return take(Tok::colon, 1);
    case ',': return take(Tok::comma, 1);
    case '.': return take(Tok::dot, 1);
    case '=': return take(Tok::eq, 1);
    case '&': return take(Tok::amp, 1);
    default: return false;
    }
  }

  std::string_view src_;
  std::string file_;
  std::vector<Diagnostic> &diags_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

struct SyntaxError {};

std::optional<Rational> parse_number(const std::string &text) {
  try {
    if (text.size() > 18) return std::nullopt;
    if (auto slash = text.find('/'); slash != std::string::npos) {
      const auto num = std::stoll(text.substr(0, slash));
      const auto den = std::stoll(text.substr(slash + 1));
      if (den == 0) return std::nullopt;
      return Rational(num, den);
    }
    if (auto dot = text.find('.'); dot != std::string::npos) {
      const auto frac = text.substr(dot + 1);
      std::int64_t den = 1;
      for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
      return Rational(std::stoll(text.substr(0, dot)) * den + std::stoll(frac), den);
    }
    return Rational(std::stoll(text));
  } catch (const std::exception &) {
    return std::nullopt;
  }
}

class Parser {
public:
  Parser(std::vector<Token> toks, std::string file, std::vector<Diagnostic> &diags)
      : toks_(std::move(toks)), file_(std::move(file)), diags_(diags) {}

  // ---- model -------------------------------------------------------------

  std::optional<SystemModel> parse_model() {
    SystemModel model;
    bool have_scale = false;
    const bool defaulted = !(peek().kind == Tok::ident && peek().text == "scale");
    if (defaulted) {
      model.scale = Scale::default_scale();
      scale_ = &model.scale;
      have_scale = true;
    }
    while (!at(Tok::end)) {
      begin_statement();
      try {
        const Token &kw = peek();
        if (kw.kind != Tok::ident) fail(kw, "expected 'scale', 'component' or 'link', found " + describe(kw));
        if (kw.text == "scale") {
          auto s = parse_scale();
          if (defaulted) {
            error(kw, "the scale declaration must come before any component or link");
          } else if (have_scale) {
            error(kw, "duplicate scale declaration");
          } else if (s) {
            model.scale = std::move(*s);
            have_scale = true;
            scale_ = &model.scale;
          }
        } else if (kw.text == "component") {
          model.components.push_back(parse_component());
        } else if (kw.text == "link") {
          model.links.push_back(parse_link());
        } else {
          fail(kw, "expected 'scale', 'component' or 'link', found " + describe(kw));
        }
      } catch (const SyntaxError &) {
        synchronize();
        // a stray '}' at top level would otherwise stall the loop
        if (at(Tok::rbrace)) next();
      }
    }
    if (!have_scale) return std::nullopt;
    if (model.components.empty() && diags_.empty()) diags_.push_back({{file_, 1, 1}, "the model declares no components"});
    return model;
  }

  // ---- observations ------------------------------------------------------

  void parse_observations(const SystemModel &model, ObservationParseResult &out) {
    model_ = &model;
    scale_ = &model.scale;
    while (!at(Tok::end)) {
      begin_statement();
      try {
        const Token &kw = peek();
        if (kw.kind == Tok::ident && kw.text == "context") {
          parse_context(out.context);
        } else if (kw.kind == Tok::ident && kw.text == "obs") {
          next();
          const auto span = span_of(kw);
          add_observation(parse_obs_body(), span, out.observations);
        } else {
          fail(kw, "expected 'context' or 'obs', found " + describe(kw));
        }
      } catch (const SyntaxError &) {
        synchronize();
        if (at(Tok::rbrace)) next();
      }
    }
  }

  ObservationEntry parse_single_observation(const SystemModel &model) {
    model_ = &model;
    scale_ = &model.scale;
    begin_statement();
    if (peek().kind == Tok::ident && peek().text == "obs") next();
    auto e = parse_obs_body();
    if (!at(Tok::end)) fail(peek(), "unexpected " + describe(peek()) + " after observation");
    return e;
  }

private:
  // ---- token helpers -----------------------------------------------------

  const Token &peek() const { return toks_[pos_]; }
  bool at(Tok k) const { return peek().kind == k; }
  const Token &next() {
    const Token &t = toks_[pos_];
    if (t.kind != Tok::end) ++pos_;
    return t;
  }
  bool accept(Tok k) {
    if (!at(k)) return false;
    next();
    return true;
  }
  const Token &expect(Tok k, const char *what) {
    if (!at(k)) fail(peek(), std::string("expected ") + what + ", found " + describe(peek()));
    return next();
  }
  const Token &expect_ident(const char *what) { return expect(Tok::ident, what); }

  SourceSpan span_of(const Token &t) const { return {file_, t.line, t.column}; }
  void error(const Token &t, std::string msg) { diags_.push_back({span_of(t), std::move(msg)}); }
  [[noreturn]] void fail(const Token &t, std::string msg) {
    error(t, std::move(msg));
    throw SyntaxError{};
  }

  void begin_statement() { stmt_start_ = pos_; }

  // A statement ends at ';', before a '}', at end of input, or at a line break.
  void end_statement() {
    if (accept(Tok::semi)) return;
    if (at(Tok::rbrace) || at(Tok::end) || peek().newline_before) return;
    fail(peek(), "expected ';' or end of line, found " + describe(peek()));
  }

  void synchronize() {
    int depth = 0; // braces opened by the broken statement itself
    while (true) {
      const Token &t = peek();
      if (t.kind == Tok::end) return;
      if (t.kind == Tok::lbrace) ++depth;
      if (t.kind == Tok::rbrace) {
        if (depth == 0) return;
        --depth;
        next();
        continue;
      }
      if (t.kind == Tok::semi && depth == 0) {
        next();
        return;
      }
      if (t.newline_before && pos_ != stmt_start_) return;
      next();
    }
  }

  // Level names may span several words on one line ("almost certain").
  std::pair<std::string, Token> parse_level_words() {
    const Token first = expect_ident("a certainty level");
    std::string name = first.text;
    while (at(Tok::ident) && !peek().newline_before) name += "_" + next().text;
    return {name, first};
  }

  Degree resolve_level(Polarity polarity) {
    auto [name, tok] = parse_level_words();
    if (!scale_) fail(tok, "certainty level '" + name + "' used before the scale declaration");
    auto d = polarity == Polarity::excludes ? scale_->find_absence(name) : scale_->find(name);
    if (!d) fail(tok, "unknown level '" + name + "'");
    return *d;
  }

  // ---- model pieces ------------------------------------------------------

  std::optional<Scale> parse_scale() {
    const Token &kw = next();
    expect(Tok::lbrace, "'{'");
    std::vector<Level> levels;
    while (!at(Tok::rbrace)) {
      const Token &name = expect_ident("a level name");
      expect(Tok::eq, "'='");
      const Token &num = expect(Tok::number, "a value in [0,1]");
      auto v = parse_number(num.text);
      if (!v || *v < 0 || *v > 1) fail(num, "level value " + num.text + " is not in [0,1]");
      levels.push_back({name.text, Degree(*v)});
      accept(Tok::comma);
    }
    next();
    accept(Tok::semi);
    try {
      return Scale::make(std::move(levels));
    } catch (const ScaleError &e) {
      error(kw, e.what());
      return std::nullopt;
    }
  }

  static ParamKind parse_kind(const Token &t, Parser &p) {
    if (t.text == "analog") return ParamKind::analog;
    if (t.text == "digital") return ParamKind::digital;
    if (t.text == "custom") return ParamKind::custom;
    p.fail(t, "expected 'analog', 'digital' or 'custom', found " + describe(t));
  }

  ParamDecl parse_param(bool is_output) {
    const Token &kw = next();
    ParamDecl p;
    p.span = span_of(kw);
    p.id = expect_ident("a parameter name").text;
    expect(Tok::colon, "':'");
    p.kind = parse_kind(expect_ident("a parameter kind"), *this);
    expect(Tok::lbrace, "'{'");
    while (!at(Tok::rbrace)) {
      p.states.push_back(expect_ident("a state name").text);
      accept(Tok::comma);
    }
    next();
    if (at(Tok::ident) && peek().text == "observable") {
      if (!is_output) fail(peek(), "inputs cannot be observable");
      next();
      p.observable = true;
    }
    end_statement();
    return p;
  }

  BehaviorRule parse_rule() {
    const Token &kw = next();
    BehaviorRule r;
    r.span = span_of(kw);
    if (accept(Tok::lbracket)) {
      r.config = expect_ident("a config mode").text;
      expect(Tok::rbracket, "']'");
    }
    do {
      const Token &name = expect_ident("an input literal or fault mode");
      if (accept(Tok::eq)) {
        r.antecedent.push_back({LiteralKind::input_state, name.text, expect_ident("a state").text});
      } else {
        r.antecedent.push_back({LiteralKind::fault_mode, "", name.text});
      }
    } while (accept(Tok::amp));
    if (accept(Tok::entails)) {
      r.polarity = Polarity::entails;
    } else if (accept(Tok::excludes)) {
      r.polarity = Polarity::excludes;
    } else {
      fail(peek(), "expected '=>' or '=/>', found " + describe(peek()));
    }
    r.output = expect_ident("an output").text;
    expect(Tok::eq, "'='");
    r.state = expect_ident("a state").text;
    r.certainty = resolve_level(r.polarity);
    if (!r.certainty.positive()) fail(toks_[pos_ - 1], "rule certainty must be positive");
    end_statement();
    return r;
  }

  Component parse_component() {
    const Token &kw = next();
    Component c;
    c.span = span_of(kw);
    c.id = expect_ident("a component name").text;
    if (at(Tok::ident) && peek().text == "trusted") {
      next();
      c.trusted = true;
    }
    expect(Tok::lbrace, "'{'");
    while (!at(Tok::rbrace) && !at(Tok::end)) {
      begin_statement();
      try {
        const Token &m = peek();
        if (m.kind != Tok::ident) fail(m, "expected a component member, found " + describe(m));
        if (m.text == "input") {
          c.inputs.push_back(parse_param(false));
        } else if (m.text == "output") {
          c.outputs.push_back(parse_param(true));
        } else if (m.text == "config") {
          next();
          expect(Tok::lbrace, "'{'");
          while (!at(Tok::rbrace)) {
            c.config_modes.push_back(expect_ident("a config mode").text);
            accept(Tok::comma);
          }
          next();
          accept(Tok::semi);
        } else if (m.text == "fault") {
          next();
          do c.fault_modes.push_back(expect_ident("a fault mode").text);
          while (accept(Tok::comma));
          end_statement();
        } else if (m.text == "rule") {
          c.rules.push_back(parse_rule());
        } else {
          fail(m, "expected 'input', 'output', 'config', 'fault' or 'rule', found " + describe(m));
        }
      } catch (const SyntaxError &) {
        synchronize();
      }
    }
    expect(Tok::rbrace, "'}'");
    accept(Tok::semi);
    return c;
  }

  Endpoint parse_endpoint() {
    Endpoint e;
    e.component = expect_ident("a component").text;
    expect(Tok::dot, "'.'");
    e.param = expect_ident("a parameter").text;
    return e;
  }

  Link parse_link() {
    const Token &kw = next();
    Link l;
    l.span = span_of(kw);
    l.source = parse_endpoint();
    expect(Tok::arrow, "'->'");
    do l.targets.push_back(parse_endpoint());
    while (accept(Tok::comma));
    end_statement();
    return l;
  }

  // ---- observation pieces ------------------------------------------------

  void parse_context(Context &ctx) {
    next();
    while (at(Tok::ident) && !peek().newline_before) {
      const Token &comp = next();
      expect(Tok::eq, "'='");
      const Token &mode = expect_ident("a config mode");
      const auto *c = model_->find(comp.text);
      if (!c) fail(comp, "unknown component '" + comp.text + "'");
      if (!c->has_config(mode.text)) fail(mode, "component '" + comp.text + "' has no config mode '" + mode.text + "'");
      if (!ctx.assignments.emplace(comp.text, mode.text).second)
        fail(comp, "component '" + comp.text + "' is assigned twice");
      accept(Tok::comma);
    }
    end_statement();
  }

  ObservationEntry parse_obs_body() {
    ObservationEntry e;
    const Token &first = expect_ident("an output");
    if (accept(Tok::dot)) {
      const Token &out = expect_ident("an output");
      const auto *c = model_->find(first.text);
      if (!c) fail(first, "unknown component '" + first.text + "'");
      if (!c->find_output(out.text)) fail(out, "component '" + first.text + "' has no output '" + out.text + "'");
      e.manifestation.component = first.text;
      e.manifestation.output = out.text;
    } else {
      int hits = 0;
      for (const auto &c : model_->components)
        if (c.find_output(first.text)) {
          ++hits;
          e.manifestation.component = c.id;
        }
      if (hits == 0) fail(first, "unknown output '" + first.text + "'");
      if (hits > 1) fail(first, "output name '" + first.text + "' is ambiguous; write component.output");
      e.manifestation.output = first.text;
    }
    const auto *out = model_->find(e.manifestation.component)->find_output(e.manifestation.output);
    if (!out->observable)
      fail(first, "output " + e.manifestation.component + "." + e.manifestation.output + " is not observable");

    if (accept(Tok::eq)) {
      e.polarity = ObsPolarity::present;
    } else if (accept(Tok::neq)) {
      e.polarity = ObsPolarity::absent;
    } else {
      fail(peek(), "expected '=' or '!=', found " + describe(peek()));
    }
    const Token &state = expect_ident("a state");
    if (std::find(out->states.begin(), out->states.end(), state.text) == out->states.end())
      fail(state, "output " + e.manifestation.component + "." + e.manifestation.output + " has no state '" +
                      state.text + "'");
    e.manifestation.state = state.text;
    auto [level, level_tok] = parse_level_words();
    if (auto d = scale_->find(level)) {
      e.degree = *d;
    } else if (auto a = scale_->find_absence(level)) {
      // `= S impossible` reads as `!= S certain`
      if (e.polarity == ObsPolarity::absent) fail(level_tok, "level '" + level + "' already denies the state; use '='");
      e.polarity = ObsPolarity::absent;
      e.degree = *a;
    } else {
      fail(level_tok, "unknown level '" + level + "'");
    }
    if (!e.degree.positive()) fail(state, "observation degree must be positive");
    end_statement();
    return e;
  }

  void add_observation(const ObservationEntry &e, const SourceSpan &span, Observations &obs) {
    auto &same = e.polarity == ObsPolarity::present ? obs.present : obs.absent;
    auto &other = e.polarity == ObsPolarity::present ? obs.absent : obs.present;
    if (other.count(e.manifestation)) {
      diags_.push_back({span, "manifestation " + e.manifestation.to_string() + " is observed both present and absent"});
      return;
    }
    auto [it, inserted] = same.emplace(e.manifestation, e.degree);
    if (!inserted && it->second != e.degree)
      diags_.push_back({span, "manifestation " + e.manifestation.to_string() + " is observed with two degrees"});
  }

  std::vector<Token> toks_;
  std::string file_;
  std::vector<Diagnostic> &diags_;
  std::size_t pos_ = 0;
  std::size_t stmt_start_ = 0;
  const Scale *scale_ = nullptr;
  const SystemModel *model_ = nullptr;

public:
  void set_scale(const Scale *s) { scale_ = s; }
};

std::string kind_name(ParamKind k) {
  switch (k) {
  case ParamKind::analog: return "analog";
  case ParamKind::digital: return "digital";
  case ParamKind::custom: return "custom";
  }
  return "custom";
}

void write_param(std::ostream &os, const char *kw, const ParamDecl &p) {
  os << "  " << kw << " " << p.id << ": " << kind_name(p.kind) << "{";
  for (std::size_t i = 0; i < p.states.size(); ++i) os << (i ? " " : "") << p.states[i];
  os << "}" << (p.observable ? " observable" : "") << ";\n";
}

} // namespace

ModelParseResult parse_model(std::string_view text, const std::string &file) {
  ModelParseResult res;
  auto toks = Lexer(text, file, res.errors).run();
  Parser parser(std::move(toks), file, res.errors);
  auto model = parser.parse_model();
  if (!model || !res.errors.empty()) return res;
  for (auto &v : validate_model(*model)) {
    if (v.severity == Severity::error) {
      if (v.span.file.empty()) v.span.file = file;
      res.errors.push_back({v.span, v.component.empty() ? v.message : v.component + ": " + v.message});
    } else {
      res.report.push_back(std::move(v));
    }
  }
  res.model = std::move(model);
  return res;
}

ObservationParseResult parse_observations(std::string_view text, const SystemModel &model, const std::string &file) {
  ObservationParseResult res;
  auto toks = Lexer(text, file, res.errors).run();
  Parser parser(std::move(toks), file, res.errors);
  parser.set_scale(&model.scale);
  parser.parse_observations(model, res);
  return res;
}

ObservationEntry parse_observation_statement(std::string_view text, const SystemModel &model) {
  std::vector<Diagnostic> diags;
  auto toks = Lexer(text, "<input>", diags).run();
  if (!diags.empty()) throw ModelError(diags.front().message);
  Parser parser(std::move(toks), "<input>", diags);
  parser.set_scale(&model.scale);
  try {
    return parser.parse_single_observation(model);
  } catch (const SyntaxError &) {
    throw ModelError(diags.empty() ? "malformed observation" : diags.front().message);
  }
}

std::string serialize_model(const SystemModel &model) {
  std::ostringstream os;
  os << "scale {";
  for (const auto &l : model.scale.levels()) os << " " << l.name << "=" << l.value.to_string();
  os << " }\n";
  for (const auto &c : model.components) {
    os << "\ncomponent " << c.id << (c.trusted ? " trusted" : "") << " {\n";
    if (!c.config_modes.empty()) {
      os << "  config {";
      for (const auto &m : c.config_modes) os << " " << m;
      os << " }\n";
    }
    for (const auto &p : c.inputs) write_param(os, "input", p);
    for (const auto &p : c.outputs) write_param(os, "output", p);
    if (!c.fault_modes.empty()) {
      os << "  fault ";
      for (std::size_t i = 0; i < c.fault_modes.size(); ++i) os << (i ? ", " : "") << c.fault_modes[i];
      os << ";\n";
    }
    for (const auto &r : c.rules) {
      os << "  rule ";
      if (r.config) os << "[" << *r.config << "] ";
      for (std::size_t i = 0; i < r.antecedent.size(); ++i) {
        const auto &l = r.antecedent[i];
        if (i) os << " & ";
        if (l.kind == LiteralKind::input_state)
          os << l.param << "=" << l.value;
        else
          os << l.value;
      }
      os << (r.polarity == Polarity::entails ? " => " : " =/> ") << r.output << "=" << r.state << " "
         << model.scale.name_of(r.certainty) << ";\n";
    }
    os << "}\n";
  }
  if (!model.links.empty()) os << "\n";
  for (const auto &l : model.links) {
    os << "link " << l.source.component << "." << l.source.param << " ->";
    for (std::size_t i = 0; i < l.targets.size(); ++i)
      os << (i ? ", " : " ") << l.targets[i].component << "." << l.targets[i].param;
    os << ";\n";
  }
  return os.str();
}

std::string serialize_observations(const SystemModel &model, const Context &context, const Observations &obs) {
  std::ostringstream os;
  if (!context.assignments.empty()) {
    os << "context";
    for (const auto &[c, m] : context.assignments) os << " " << c << "=" << m;
    os << ";\n";
  }
  for (const auto &[m, d] : obs.present)
    os << "obs " << m.component << "." << m.output << " = " << m.state << " " << model.scale.name_of(d) << ";\n";
  for (const auto &[m, d] : obs.absent)
    os << "obs " << m.component << "." << m.output << " != " << m.state << " " << model.scale.name_of(d) << ";\n";
  return os.str();
}

} // namespace possdiag
