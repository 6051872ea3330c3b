#include "support.hpp"

#include <gtest/gtest.h>

using namespace possdiag;
using testing_support::load_model_text;

namespace {

const char *kBase = R"(
scale { certain=1 likely=3/5 doubtful=2/5 possible=0 }
component src {
  output out: analog{LOW HIGH} observable;
}
component sw {
  config {ON OFF}
  input in: analog{LOW HIGH};
  output out: analog{LOW HIGH} observable;
  fault stuck;
  rule [ON] in=LOW => out=LOW certain;
  rule stuck => out=HIGH likely;
}
link src.out -> sw.in;
)";

bool mentions(const ValidationReport &r, const std::string &needle, Severity sev = Severity::error) {
  return std::any_of(r.begin(), r.end(), [&](const Violation &v) {
    return v.severity == sev && v.message.find(needle) != std::string::npos;
  });
}

} // namespace

TEST(Validate, BaseModelIsClean) {
  const auto m = load_model_text(kBase);
  EXPECT_TRUE(validate_model(m).empty());
}

TEST(Validate, DuplicateComponent) {
  auto m = load_model_text(kBase);
  m.components.push_back(m.components[0]);
  EXPECT_TRUE(mentions(validate_model(m), "duplicate component 'src'"));
}

TEST(Validate, ParameterChecks) {
  auto m = load_model_text(kBase);
  m.components[1].inputs[0].observable = true;
  m.components[1].outputs[0].states.push_back("LOW");
  m.components[0].outputs[0].states.push_back("NOMINAL");
  const auto r = validate_model(m);
  EXPECT_TRUE(mentions(r, "input 'in' cannot be observable"));
  EXPECT_TRUE(mentions(r, "repeats state 'LOW'"));
  EXPECT_TRUE(mentions(r, "implicit NOMINAL"));
}

TEST(Validate, EmptyStateSet) {
  auto m = load_model_text(kBase);
  m.components[0].outputs[0].states.clear();
  EXPECT_TRUE(mentions(validate_model(m), "declares no abnormal state"));
}

TEST(Validate, TrustedComponentWithFaults) {
  auto m = load_model_text(kBase);
  m.components[1].trusted = true;
  EXPECT_TRUE(mentions(validate_model(m), "trusted component declares fault modes"));
}

TEST(Validate, RuleReferences) {
  auto m = load_model_text(kBase);
  auto &rules = m.components[1].rules;
  rules[0].config = "AUTO";
  rules[0].antecedent[0].value = "MID";
  rules[1].antecedent[0].value = "burnt";
  rules[1].output = "aux";
  const auto r = validate_model(m);
  EXPECT_TRUE(mentions(r, "undeclared config mode 'AUTO'"));
  EXPECT_TRUE(mentions(r, "state 'MID' is not declared by input 'in' (declared at line"));
  EXPECT_TRUE(mentions(r, "undeclared fault mode 'burnt'"));
  EXPECT_TRUE(mentions(r, "undeclared output 'aux'"));
}

TEST(Validate, RuleCertaintyOnScaleAndPositive) {
  auto m = load_model_text(kBase);
  m.components[1].rules[0].certainty = Degree(1, 2);
  m.components[1].rules[1].certainty = Degree::zero();
  const auto r = validate_model(m);
  EXPECT_TRUE(mentions(r, "not on the scale"));
  EXPECT_TRUE(mentions(r, "must be positive"));
}

TEST(Validate, EmptyAntecedent) {
  auto m = load_model_text(kBase);
  m.components[1].rules[0].antecedent.clear();
  EXPECT_TRUE(mentions(validate_model(m), "no input or fault literal"));
}

TEST(Validate, IncoherentRules) {
  auto m = load_model_text(kBase);
  auto r = m.components[1].rules[1];
  r.polarity = Polarity::excludes;
  m.components[1].rules.push_back(r);
  EXPECT_TRUE(mentions(validate_model(m), "incoherent rules"));
}

TEST(Validate, DifferentCertaintiesSamePolarityAreCoherent) {
  auto m = load_model_text(kBase);
  auto r = m.components[1].rules[1];
  r.certainty = Degree::one();
  m.components[1].rules.push_back(r);
  EXPECT_FALSE(has_errors(validate_model(m)));
}

TEST(Validate, LinkChecks) {
  auto m = load_model_text(kBase);
  m.links.push_back({{"nowhere", "out"}, {{"sw", "in"}}, {}});
  m.links.push_back({{"src", "out"}, {{"sw", "out"}}, {}});
  const auto r = validate_model(m);
  EXPECT_TRUE(mentions(r, "link from unknown component 'nowhere'"));
  EXPECT_TRUE(mentions(r, "more than one link"));
  EXPECT_TRUE(mentions(r, "undeclared input 'out'"));
}

TEST(Validate, LinkStateSetsMustAgree) {
  auto m = load_model_text(kBase);
  m.components[1].inputs[0].states = {"LOW"};
  m.components[1].rules.erase(m.components[1].rules.begin());
  EXPECT_TRUE(mentions(validate_model(m), "different state sets"));
}

TEST(Validate, CyclesAreWarnings) {
  auto m = load_model_text(kBase);
  m.components[0].inputs.push_back({"fb", ParamKind::analog, {"LOW", "HIGH"}, false, {}});
  m.links.push_back({{"sw", "out"}, {{"src", "fb"}}, {}});
  const auto r = validate_model(m);
  EXPECT_FALSE(has_errors(r));
  EXPECT_TRUE(mentions(r, "cycle", Severity::warning));
}

TEST(Compose, ContextMustAssignEveryConfigurableComponent) {
  const auto m = load_model_text(kBase);
  EXPECT_THROW(compose_problem(m, {}, {}), ModelError);
  EXPECT_THROW(compose_problem(m, Context{{{"sw", "AUTO"}}}, {}), ModelError);
  EXPECT_THROW(compose_problem(m, Context{{{"ghost", "ON"}, {"sw", "ON"}}}, {}), ModelError);
  EXPECT_NO_THROW(compose_problem(m, Context{{{"sw", "ON"}}}, {}));
}

TEST(Compose, ContextSelectsActiveRules) {
  const auto m = load_model_text(kBase);
  const auto on = compose_problem(m, Context{{{"sw", "ON"}}}, {});
  const auto off = compose_problem(m, Context{{{"sw", "OFF"}}}, {});
  EXPECT_TRUE(on.active(1, 0));
  EXPECT_FALSE(off.active(1, 0));
  EXPECT_TRUE(off.active(1, 1));
}

TEST(Compose, ObservationChecks) {
  const auto m = load_model_text(kBase);
  const Context cx{{{"sw", "ON"}}};
  Observations bad_state;
  bad_state.present[{"sw", "out", "MID"}] = Degree::one();
  EXPECT_THROW(compose_problem(m, cx, bad_state), ModelError);

  Observations zero;
  zero.present[{"sw", "out", "LOW"}] = Degree::zero();
  EXPECT_THROW(compose_problem(m, cx, zero), ModelError);

  Observations off_scale;
  off_scale.present[{"sw", "out", "LOW"}] = Degree(1, 5);
  EXPECT_THROW(compose_problem(m, cx, off_scale), ModelError);

  Observations both;
  both.present[{"sw", "out", "LOW"}] = Degree::one();
  both.absent[{"sw", "out", "LOW"}] = Degree::one();
  EXPECT_THROW(compose_problem(m, cx, both), ModelError);
}

TEST(Compose, RejectsInvalidModel) {
  auto m = load_model_text(kBase);
  m.components.push_back(m.components[0]);
  EXPECT_THROW(compose_problem(m, Context{{{"sw", "ON"}}}, {}), ModelError);
}

TEST(Manifestation, Unobservable) {
  auto m = load_model_text(kBase);
  m.components[0].outputs[0].observable = false;
  EXPECT_THROW(check_manifestation(m, {"src", "out", "LOW"}), ModelError);
  EXPECT_THROW(check_manifestation(m, {"src", "nope", "LOW"}), ModelError);
  EXPECT_NO_THROW(check_manifestation(m, {"sw", "out", "LOW"}));
}

TEST(Disorder, Identifiers) {
  EXPECT_EQ(Disorder::fault("sw", "stuck").id(), "sw[stuck]");
  EXPECT_EQ(Disorder::signature("sw", "out", "LOW").id(), "sw.out(LOW)");
  EXPECT_EQ(Disorder::signature("sw", {{"b", "X"}, {"a", "Y"}}).id(), "sw{a(Y),b(X)}");
  EXPECT_EQ((Manifestation{"c", "o", "S"}.to_string()), "c.o(S)");
}

TEST(Model, ObservableOutputs) {
  const auto m = load_model_text(kBase);
  const auto obs = observable_outputs(m);
  EXPECT_EQ(obs.size(), 2u);
  EXPECT_TRUE(obs.count({"sw", "out"}));
}
