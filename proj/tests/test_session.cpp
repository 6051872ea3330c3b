#include "support.hpp"

#include "possdiag/session.hpp"

#include <gtest/gtest.h>

using namespace possdiag;
using namespace testing_support;

namespace {

Session fixture_session(Session::JournalSink sink = {}) {
  return Session::create(fixture_model(), fixture_initial(), "t1", std::move(sink));
}

const BoardEntry *entry(const Board &b, const std::string &id) {
  for (const auto &e : b.entries)
    if (e.hypothesis.disorder.id() == id) return &e;
  return nullptr;
}

ObservationEntry obs(const Session &s, const std::string &comp, const std::string &out, const std::string &state,
                     const std::string &level, ObsPolarity pol = ObsPolarity::present) {
  return make_observation(s.problem().model, comp, out, state, pol, level);
}

std::string replace_line(const std::string &text, std::size_t index, const std::string &line) {
  std::istringstream in(text);
  std::string out, l;
  for (std::size_t i = 0; std::getline(in, l); ++i) out += (i == index ? line : l) + "\n";
  return out;
}

} // namespace

TEST(Session, InitialBoard) {
  auto s = fixture_session();
  EXPECT_EQ(s.revision(), 0);
  ASSERT_EQ(s.board().entries.size(), 11u);
  EXPECT_EQ(s.board().entries[0].hypothesis.disorder.id(), "alim.out(ABS)");
  int certain = 0;
  for (const auto &e : s.board().entries) {
    certain += e.hypothesis.abductive_degree.is_one();
    EXPECT_TRUE(e.hypothesis.active());
    EXPECT_FALSE(e.discarded_by);
  }
  EXPECT_EQ(certain, 2);
  EXPECT_FALSE(s.board().probes.empty());
  ASSERT_EQ(s.journal().size(), 2u);
  EXPECT_EQ(nlohmann::json::parse(s.journal()[0])["event"], "session");
  EXPECT_EQ(nlohmann::json::parse(s.journal()[0])["model_sha256"], sha256_hex(fixture_model()));
}

TEST(Session, NothingToExplain) {
  try {
    Session::create(fixture_model(), "context rel_0=OFF rel_1=ON rel_2=OFF\n");
    FAIL();
  } catch (const SessionError &e) {
    EXPECT_NE(std::string(e.what()).find("nothing to explain"), std::string::npos);
  }
}

TEST(Session, MalformedModelCarriesDiagnostics) {
  try {
    Session::create("component a { output o: digital{X Y} observable; rule => o=X certain; }", "obs a.o = X certain");
    FAIL();
  } catch (const SessionError &e) {
    ASSERT_FALSE(e.diagnostics.empty());
    EXPECT_EQ(e.diagnostics[0].span.line, 1);
  }
}

TEST(Session, MalformedObservationsCarryDiagnostics) {
  try {
    Session::create(fixture_model(), "obs comp_0.obs_0 = MAYBE certain\n");
    FAIL();
  } catch (const SessionError &e) {
    ASSERT_FALSE(e.diagnostics.empty());
  }
}

TEST(Session, ObservationDiscardsAndRecordsCause) {
  auto s = fixture_session();
  const auto e = obs(s, "comp_0", "obs_0", "ONE", "impossible");
  EXPECT_EQ(e.polarity, ObsPolarity::absent);
  ASSERT_TRUE(s.add_observation(e));
  EXPECT_EQ(s.revision(), 1);
  const auto *abs = entry(s.board(), "alim.out(ABS)");
  ASSERT_NE(abs, nullptr);
  EXPECT_FALSE(abs->hypothesis.active());
  ASSERT_TRUE(abs->discarded_by);
  EXPECT_NE(abs->discarded_by->find("comp_0.obs_0"), std::string::npos);
  EXPECT_EQ(*abs->discarded_by, describe_observation(s.scale(), e));
  EXPECT_TRUE(entry(s.board(), "alim.out(DEG)")->hypothesis.active());
  EXPECT_EQ(s.board().entries[0].hypothesis.disorder.id(), "source.out_3(ABS)");
}

TEST(Session, DiscardCauseIsKeptAcrossRevisions) {
  auto s = fixture_session();
  const auto first = obs(s, "comp_0", "obs_0", "ONE", "impossible");
  s.add_observation(first);
  s.add_observation(obs(s, "comp_1", "obs_1", "ONE", "certain"));
  EXPECT_EQ(*entry(s.board(), "alim.out(ABS)")->discarded_by, describe_observation(s.scale(), first));
}

TEST(Session, IdenticalObservationIsNoOp) {
  auto s = fixture_session();
  const auto e = obs(s, "comp_1", "obs_1", "ONE", "certain");
  ASSERT_TRUE(s.add_observation(e));
  const auto journal = s.journal();
  EXPECT_FALSE(s.add_observation(e));
  EXPECT_EQ(s.revision(), 1);
  EXPECT_EQ(s.journal(), journal);
  EXPECT_FALSE(s.add_observation(obs(s, "eclipse", "Eclipse_signal", "ONE", "certain")));
}

TEST(Session, ConflictingObservations) {
  auto s = fixture_session();
  EXPECT_THROW(s.add_observation(obs(s, "eclipse", "Eclipse_signal", "ONE", "likely")), ConflictError);
  EXPECT_THROW(s.add_observation(obs(s, "eclipse", "Eclipse_signal", "ONE", "certain", ObsPolarity::absent)),
               ConflictError);
  s.add_observation(obs(s, "comp_0", "obs_0", "ONE", "impossible"));
  EXPECT_THROW(s.add_observation(obs(s, "comp_0", "obs_0", "ONE", "certain")), ConflictError);
  EXPECT_EQ(s.revision(), 1);
}

TEST(Session, BadObservationFields) {
  auto s = fixture_session();
  EXPECT_THROW(obs(s, "comp_0", "obs_0", "ONE", "sometimes"), SessionError);
  EXPECT_THROW(obs(s, "comp_0", "obs_0", "ONE", "possible"), SessionError);
  EXPECT_THROW(obs(s, "comp_0", "obs_0", "ONE", "impossible", ObsPolarity::absent), SessionError);
  EXPECT_THROW(s.add_observation(obs(s, "comp_9", "obs_0", "ONE", "certain")), SessionError);
  EXPECT_THROW(s.add_observation(obs(s, "comp_0", "obs_0", "HALF", "certain")), SessionError);
  EXPECT_EQ(s.revision(), 0);
}

TEST(Session, WhatIfLeavesSessionUntouched) {
  auto s = fixture_session();
  const auto journal = s.journal_text();
  const auto before = board_json(s.scale(), s.board()).dump();
  const auto e = obs(s, "comp_0", "obs_0", "ONE", "impossible");
  const auto hypo = s.what_if(e);
  EXPECT_EQ(s.journal_text(), journal);
  EXPECT_EQ(board_json(s.scale(), s.board()).dump(), before);
  EXPECT_FALSE(entry(hypo, "alim.out(ABS)")->hypothesis.active());

  s.add_observation(e);
  auto committed = s.board();
  committed.revision = hypo.revision;
  EXPECT_EQ(board_json(s.scale(), committed).dump(), board_json(s.scale(), hypo).dump());
}

TEST(Session, WhatIfOnRecordedObservationIsCurrentBoard) {
  auto s = fixture_session();
  const auto e = obs(s, "eclipse", "Eclipse_signal", "ONE", "certain");
  EXPECT_EQ(board_json(s.scale(), s.what_if(e)).dump(), board_json(s.scale(), s.board()).dump());
  EXPECT_THROW(s.what_if(obs(s, "eclipse", "Eclipse_signal", "ZERO", "certain")), ConflictError);
}

TEST(Session, Verdicts) {
  auto s = fixture_session();
  s.add_verdict("rel_1.out(DEG)", "rejected", "relay replaced yesterday");
  const auto *e = entry(s.board(), "rel_1.out(DEG)");
  ASSERT_TRUE(e->verdict);
  EXPECT_EQ(e->verdict->note, "relay replaced yesterday");
  EXPECT_EQ(s.revision(), 0);
  s.add_observation(obs(s, "comp_1", "obs_1", "ONE", "certain"));
  EXPECT_TRUE(entry(s.board(), "rel_1.out(DEG)")->verdict);
  s.add_verdict("rel_1.out(DEG)", "cleared");
  EXPECT_FALSE(entry(s.board(), "rel_1.out(DEG)")->verdict);
  EXPECT_THROW(s.add_verdict("nobody.out(X)", "rejected"), SessionError);
  EXPECT_THROW(s.add_verdict("rel_1.out(DEG)", "maybe"), SessionError);
}

TEST(Session, BoardJsonShape) {
  auto s = fixture_session();
  const auto j = board_json(s.scale(), s.board());
  EXPECT_EQ(j["revision"], 0);
  const auto &h = j["hypotheses"][0];
  for (const char *k : {"disorder", "id", "abductive_degree", "consistency_degree", "relevant", "class", "status",
                        "discarded_by", "verdict", "expected"})
    EXPECT_TRUE(h.contains(k)) << k;
  EXPECT_EQ(h["abductive_degree"]["name"], "certain");
  EXPECT_EQ(h["abductive_degree"]["numerator"], 1);
  EXPECT_EQ(h["abductive_degree"]["denominator"], 1);
  EXPECT_TRUE(h["discarded_by"].is_null());
  const auto &p = j["probes"][0];
  for (const char *k : {"manifestation", "score", "max_degree", "expectations"}) EXPECT_TRUE(p.contains(k)) << k;
}

TEST(Session, ReplayReproducesEveryRevision) {
  std::vector<std::string> sunk;
  auto s = fixture_session([&](const std::string &l) { sunk.push_back(l); });
  s.add_verdict("res_0.out(DEG)", "rejected");
  s.add_observation(obs(s, "bus", "obs_bus", "DEG", "almost_certain"));
  s.add_observation(obs(s, "bus", "obs_bus", "ABS", "impossible"));
  s.add_observation(obs(s, "comp_0", "obs_0", "ONE", "impossible"));
  s.add_observation(obs(s, "comp_1", "obs_1", "ONE", "certain"));
  s.add_observation(obs(s, "comp_2", "obs_2", "ZERO", "certain"));
  EXPECT_EQ(sunk, s.journal());

  const auto r = Session::replay(s.journal_text());
  EXPECT_EQ(r.revision_digests(), s.revision_digests());
  EXPECT_EQ(r.revision(), 5);
  EXPECT_EQ(r.id(), "t1");
  EXPECT_EQ(board_json(r.scale(), r.board()).dump(), board_json(s.scale(), s.board()).dump());
  EXPECT_EQ(r.journal_text(), s.journal_text());
}

TEST(Session, ReplayOfDirectCreationMatches) {
  auto a = Session::create(fixture_model(), fixture_initial() + fixture_probes(), "x");
  auto b = Session::replay(a.journal_text());
  EXPECT_EQ(a.revision_digests(), b.revision_digests());
}

TEST(Session, ReplayErrors) {
  auto s = fixture_session();
  s.add_observation(obs(s, "comp_1", "obs_1", "ONE", "certain"));
  const auto text = s.journal_text();

  auto message = [](const std::string &journal) {
    try {
      Session::replay(journal);
    } catch (const SessionError &e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message("").find("empty"), std::string::npos);
  EXPECT_NE(message(replace_line(text, 2, R"({"event":"teleport"})")).find("unknown event type 'teleport' at event index 2"),
            std::string::npos);
  const auto corrupt = message(replace_line(text, 3, R"({"event":"snap)"));
  EXPECT_NE(corrupt.find("corrupt"), std::string::npos) << corrupt;
  EXPECT_NE(corrupt.find("#2 (observation)"), std::string::npos) << corrupt;

  auto tampered = nlohmann::json::parse(s.journal()[3]);
  tampered["board_sha256"] = std::string(64, '0');
  EXPECT_NE(message(replace_line(text, 3, tampered.dump())).find("board differs"), std::string::npos);

  auto header = nlohmann::json::parse(s.journal()[0]);
  header["model"] = header["model"].get<std::string>() + "\n# edited\n";
  EXPECT_NE(message(replace_line(text, 0, header.dump())).find("hash"), std::string::npos);
}

TEST(Session, DiscardsAreMonotoneAlongTheWalkthrough) {
  auto s = fixture_session();
  std::set<std::string> discarded;
  const std::vector<ObservationEntry> steps{
      obs(s, "bus", "obs_bus", "DEG", "almost_certain"), obs(s, "bus", "obs_bus", "ABS", "impossible"),
      obs(s, "comp_0", "obs_0", "ONE", "impossible"), obs(s, "comp_1", "obs_1", "ONE", "certain"),
      obs(s, "comp_2", "obs_2", "ZERO", "certain")};
  for (const auto &e : steps) {
    s.add_observation(e);
    std::set<std::string> now;
    for (const auto &b : s.board().entries)
      if (!b.hypothesis.active()) {
        now.insert(b.hypothesis.disorder.id());
        EXPECT_TRUE(b.discarded_by) << b.hypothesis.disorder.id();
      }
    EXPECT_TRUE(std::includes(now.begin(), now.end(), discarded.begin(), discarded.end()));
    discarded = now;
  }
  EXPECT_TRUE(discarded.count("alim.out(ABS)"));
}
