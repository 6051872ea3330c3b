#include "possdiag/service.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

using namespace possdiag;

namespace {

std::string read_file(const std::string &path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::string level(const Scale &scale, const Degree &d) {
  return scale.contains(d) ? scale.name_of(d) : d.to_string();
}

void print_board(std::ostream &os, const Scale &scale, const Board &b) {
  os << "revision " << b.revision << "\n";
  os << std::left << std::setw(4) << "#" << std::setw(28) << "hypothesis" << std::setw(16) << "abductive"
     << std::setw(16) << "consistency" << std::setw(20) << "class"
     << "status\n";
  int n = 0;
  for (const auto &e : b.entries) {
    const auto &h = e.hypothesis;
    os << std::setw(4) << ++n << std::setw(28) << h.disorder.id() << std::setw(16) << level(scale, h.abductive_degree)
       << std::setw(16) << level(scale, h.consistency_degree) << std::setw(20) << to_string(h.preference_class)
       << to_string(h.status);
    if (e.discarded_by) os << " by [" << *e.discarded_by << "]";
    if (!h.relevant) os << " (irrelevant)";
    if (e.verdict) os << " " << e.verdict->verdict << (e.verdict->note.empty() ? "" : ": " + e.verdict->note);
    os << "\n";
  }
}

void print_probes(std::ostream &os, const Scale &scale, const std::vector<ProbeSuggestion> &probes) {
  if (probes.empty()) {
    os << "no probe suggested\n";
    return;
  }
  for (const auto &p : probes) {
    os << std::left << std::setw(32) << p.manifestation.to_string() << "score " << std::setw(6)
       << p.discrimination_score << "max " << level(scale, p.max_degree) << "\n";
  }
}

int cmd_check(const std::string &path) {
  auto r = parse_model(read_file(path), path);
  for (const auto &e : r.errors) std::cerr << e.to_string() << "\n";
  for (const auto &w : r.report)
    if (w.severity == Severity::warning) std::cerr << path << ":" << w.span.line << ":" << w.span.column << ": warning: " << w.message << "\n";
  if (!r.ok()) return 1;
  std::cout << path << ": " << r.model->components.size() << " components, " << r.model->links.size()
            << " links, ok\n";
  return 0;
}

int cmd_diagnose(const std::string &model, const std::string &obs, bool as_json) {
  auto s = Session::create(read_file(model), read_file(obs));
  if (as_json) {
    std::cout << board_json(s.scale(), s.board()).dump(2) << "\n";
  } else {
    print_board(std::cout, s.scale(), s.board());
    std::cout << "\nprobes\n";
    print_probes(std::cout, s.scale(), s.board().probes);
  }
  return 0;
}

void session_help() {
  std::cout << "commands: board | probes | obs <comp>.<out> =|!= <STATE> <level> | whatif <same as obs> |\n"
               "          reject <hypothesis> [note] | journal | quit\n";
}

int cmd_session(const std::string &model, const std::string &obs, const std::string &journal) {
  Session::JournalSink sink;
  if (!journal.empty()) {
    auto file = std::make_shared<std::ofstream>(journal, std::ios::trunc);
    if (!*file) throw std::runtime_error("cannot write " + journal);
    sink = [file](const std::string &line) {
      *file << line << '\n';
      file->flush();
    };
  }
  auto s = Session::create(read_file(model), read_file(obs), "local", sink);
  print_board(std::cout, s.scale(), s.board());
  session_help();
  std::string line;
  while (std::cout << "> " << std::flush, std::getline(std::cin, line)) {
    std::istringstream in(line);
    std::string cmd;
    in >> cmd;
    std::string rest;
    std::getline(in, rest);
    try {
      if (cmd.empty()) continue;
      if (cmd == "quit" || cmd == "exit") break;
      if (cmd == "board") {
        print_board(std::cout, s.scale(), s.board());
      } else if (cmd == "probes") {
        print_probes(std::cout, s.scale(), s.board().probes);
      } else if (cmd == "obs") {
        if (!s.add_observation(parse_observation_statement(rest, s.problem().model)))
          std::cout << "already observed\n";
        print_board(std::cout, s.scale(), s.board());
      } else if (cmd == "whatif") {
        std::cout << "(hypothetical)\n";
        print_board(std::cout, s.scale(), s.what_if(parse_observation_statement(rest, s.problem().model)));
      } else if (cmd == "reject") {
        std::istringstream r(rest);
        std::string hyp, note;
        r >> hyp;
        std::getline(r, note);
        if (auto p = note.find_first_not_of(' '); p != std::string::npos) note = note.substr(p);
        else note.clear();
        s.add_verdict(hyp, "rejected", note);
        print_board(std::cout, s.scale(), s.board());
      } else if (cmd == "journal") {
        std::cout << s.journal_text();
      } else {
        session_help();
      }
    } catch (const std::exception &e) {
      std::cout << "error: " << e.what() << "\n";
    }
  }
  return 0;
}

int cmd_replay(const std::string &journal, bool as_json) {
  auto s = Session::replay(read_file(journal));
  if (as_json) {
    std::cout << board_json(s.scale(), s.board()).dump(2) << "\n";
  } else {
    std::cout << "replayed " << s.revision_digests().size() << " revision snapshot(s)\n";
    print_board(std::cout, s.scale(), s.board());
  }
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"possibilistic model-based diagnosis"};
  app.require_subcommand(1);

  std::string model, obs, journal, listen = "127.0.0.1:8080", models_dir, journals_dir;
  bool as_json = false;

  auto *check = app.add_subcommand("check", "parse and validate a model");
  check->add_option("model", model, "model file (.pdm)")->required();

  auto *diag = app.add_subcommand("diagnose", "rank hypotheses for a set of observations");
  diag->add_option("model", model, "model file (.pdm)")->required();
  diag->add_option("observations", obs, "observation file (.pdo)")->required();
  diag->add_flag("--json", as_json, "print the board as JSON");

  auto *sess = app.add_subcommand("session", "interactive probing session");
  sess->add_option("model", model, "model file (.pdm)")->required();
  sess->add_option("observations", obs, "observation file (.pdo)")->required();
  sess->add_option("--journal", journal, "append the session journal to this file");

  auto *serve = app.add_subcommand("serve", "run the HTTP service");
  serve->add_option("--listen", listen, "host:port")->capture_default_str();
  serve->add_option("--models", models_dir, "directory of .pdm models")->required();
  serve->add_option("--journals", journals_dir, "directory for session journals");

  auto *replay = app.add_subcommand("replay", "rebuild a session from its journal");
  replay->add_option("journal", journal, "journal file")->required();
  replay->add_flag("--json", as_json, "print the final board as JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*check) return cmd_check(model);
    if (*diag) return cmd_diagnose(model, obs, as_json);
    if (*sess) return cmd_session(model, obs, journal);
    if (*replay) return cmd_replay(journal, as_json);
    if (*serve) {
      ServiceConfig cfg{models_dir, std::nullopt};
      if (!journals_dir.empty()) cfg.journal_dir = journals_dir;
      const auto [host, port] = parse_listen_address(listen);
      std::cerr << "listening on " << host << ":" << port << "\n";
      run_service(cfg, host, port);
      return 0;
    }
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
