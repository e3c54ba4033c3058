// Command-line front end. Kept in a header so the tests can drive it with
// string streams.

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gpe.hpp"

namespace gpe::cli {

enum Exit : int { kOk = 0, kDiagnostics = 1, kSynthesisFailed = 2, kUsage = 3 };

namespace fs = std::filesystem;

struct IoError {
  std::string message;
};

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError{"cannot read " + p.string()};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError{"cannot write " + p.string()};
  out << text;
}

inline std::string diag_line(const std::string& file, const Diagnostic& d, std::optional<SourcePos> fallback = {}) {
  SourcePos pos = d.pos.known() ? d.pos : fallback.value_or(SourcePos{});
  std::string out = file + ":" + std::to_string(pos.line) + ":" + std::to_string(pos.col) + ": " +
                    std::string(code_name(d.code)) + ": ";
  if (d.instruction) out += "instruction " + std::to_string(*d.instruction) + ": ";
  return out + d.message;
}

class Session {
 public:
  Session(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  std::optional<DomainSchema> load_domain(const std::string& path) {
    if (path.empty()) return DomainSchema{};
    DomainParse parsed = parse_domain(read_file(path));
    for (const auto& d : parsed.diagnostics) err_ << diag_line(path, d) << "\n";
    if (!parsed.ok()) return std::nullopt;
    return std::move(parsed.schema);
  }

  std::optional<WorldState> load_state(const std::string& path, const DomainSchema& schema) {
    if (path.empty()) return WorldState{};
    try {
      WorldState s = parse_state(read_file(path));
      auto diags = check_facts(s, schema);
      for (const auto& d : diags) err_ << diag_line(path, d, SourcePos{1, 1}) << "\n";
      if (!diags.empty()) return std::nullopt;
      return s;
    } catch (const Error& e) {
      err_ << diag_line(path, e.diagnostic()) << "\n";
      return std::nullopt;
    }
  }

  std::optional<ProgramParse> load_program(const std::string& path) {
    ProgramParse p = parse_program(read_file(path));
    for (const auto& d : p.diagnostics) err_ << diag_line(path, d) << "\n";
    if (!p.ok()) return std::nullopt;
    return p;
  }

  void report_run(const std::string& path, const ProgramParse& p, const RunResult& r) {
    for (const auto& d : r.diagnostics) {
      std::optional<SourcePos> at;
      if (d.instruction && *d.instruction < p.positions.size()) at = p.positions[*d.instruction];
      err_ << diag_line(path, d, at) << "\n";
    }
  }

  std::ostream& out() { return out_; }
  std::ostream& err() { return err_; }

 private:
  std::ostream& out_;
  std::ostream& err_;
};

inline void require_files(const std::vector<std::string>& paths) {
  for (const auto& p : paths)
    if (!p.empty() && !fs::is_regular_file(p)) throw IoError{"no such file: " + p};
}

inline std::string format_log(const ProgramGraph& g) {
  std::string out;
  for (std::size_t i = 0; i < g.invocation_log().size(); ++i) {
    const Invocation& inv = g.invocation_log()[i];
    out += std::to_string(i) + " n" + std::to_string(inv.node) + " " + g.node(inv.node).op + " " +
           format_binding(inv.inputs) + " -> " + format_binding(inv.outputs) + "\n";
  }
  return out;
}

inline int cmd_check(Session& s, const std::string& domain) {
  require_files({domain});
  return s.load_domain(domain) ? kOk : kDiagnostics;
}

inline int cmd_run(Session& s, const std::string& domain, const std::string& program, const std::string& init, bool log,
                   bool dot, const std::string& out_path) {
  require_files({domain, program, init});
  auto schema = s.load_domain(domain);
  if (!schema) return kDiagnostics;
  auto state = s.load_state(init, *schema);
  if (!state) return kDiagnostics;
  auto parsed = s.load_program(program);
  if (!parsed) return kDiagnostics;
  RunResult r = run_program(parsed->instructions, std::make_shared<const DomainSchema>(*schema), *state);
  s.report_run(program, *parsed, r);
  std::string text;
  if (dot) {
    text = export_dot(r.graph);
  } else if (r.ok()) {
    if (log) text += format_log(r.graph);
    text += r.graph.state().canonical();
  }
  if (!out_path.empty())
    write_file(out_path, text);
  else
    s.out() << text;
  return r.ok() ? kOk : kDiagnostics;
}

inline int cmd_trans(Session& s, const std::string& domain, const std::string& input, const std::string& out_dir) {
  require_files({domain, input});
  auto schema = s.load_domain(domain);
  if (!schema) return kDiagnostics;
  LispressTranslator tr(*schema);
  int line_no = 0;
  std::size_t ordinal = 0, failed = 0;
  std::vector<std::pair<std::string, std::string>> files;
  const std::string text = read_file(input);
  for (auto raw : split_lines(text)) {
    ++line_no;
    auto line = trim(raw);
    if (line.empty() || line[0] == ';') continue;
    ++ordinal;
    try {
      TranslationOutput t = tr.translate(parse_lispress(line));
      std::ostringstream name;
      name << std::setw(4) << std::setfill('0') << line_no << ".gtp";
      files.emplace_back(name.str(), "; " + std::string(line) + "\n" + print_program(t.instructions));
    } catch (const Error& e) {
      ++failed;
      Diagnostic d = e.diagnostic();
      int col_base = static_cast<int>(raw.find_first_not_of(" \t"));
      if (d.pos.known())
        d.pos = {line_no, d.pos.col + col_base};
      else
        d.pos = {line_no, col_base + 1};
      s.err() << diag_line(input, d) << "\n";
    }
  }
  if (!out_dir.empty()) {
    for (const auto& [name, text] : files) write_file(fs::path(out_dir) / name, text);
    write_file(fs::path(out_dir) / "domain.gtd", print_domain(tr.schema()));
  }
  s.out() << "translated " << files.size() << " of " << ordinal << " expressions; " << tr.auto_declared().size()
          << " opaque operations\n";
  return failed ? kDiagnostics : kOk;
}

inline int cmd_synth(Session& s, const std::string& domain, const std::string& examples_path, SynthesisConfig config,
                     const std::string& mode, const std::string& out_path) {
  require_files({domain, examples_path});
  auto schema = s.load_domain(domain);
  if (!schema) return kDiagnostics;
  std::vector<Example> examples;
  try {
    examples = parse_examples(read_file(examples_path));
    for (auto& ex : examples) {
      auto diags = check_facts(ex.initial, *schema);
      for (const auto& d : diags) s.err() << diag_line(examples_path, d, SourcePos{1, 1}) << "\n";
      if (!diags.empty()) return kDiagnostics;
      if (mode == "exact") ex.mode = ExampleMode::ExactFinal;
      if (mode == "subset") ex.mode = ExampleMode::GoalSubset;
    }
  } catch (const Error& e) {
    s.err() << diag_line(examples_path, e.diagnostic()) << "\n";
    return kDiagnostics;
  }
  if (examples.empty()) {
    s.err() << examples_path << ":1:1: SyntaxError: no examples\n";
    return kDiagnostics;
  }
  SynthesisResult r = synthesize(*schema, examples, config);
  if (!r.found()) {
    s.out() << (r.status == SynthesisStatus::DeadlineExceeded ? "DeadlineExceeded" : "SearchExhausted")
            << ": no program with at most " << config.max_ops << " operations; explored " << r.explored
            << " candidates\n";
    return kSynthesisFailed;
  }
  std::string text = print_program(r.program);
  if (!out_path.empty()) {
    write_file(out_path, text);
    s.out() << "found " << r.candidate.size() << " operations; explored " << r.explored << " candidates\n";
  } else {
    s.out() << text;
  }
  return kOk;
}

inline int cmd_compress(Session& s, const std::string& domain, const std::string& dir, std::size_t rounds,
                        std::size_t workers, const std::string& out_dir) {
  require_files({domain});
  if (!fs::is_directory(dir)) throw IoError{"no such directory: " + dir};
  auto schema = s.load_domain(domain);
  if (!schema) return kDiagnostics;
  std::vector<fs::path> programs;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".gtp") programs.push_back(e.path());
  std::sort(programs.begin(), programs.end());

  auto shared = std::make_shared<const DomainSchema>(*schema);
  std::vector<CorpusEntry> corpus;
  bool bad = false;
  for (const auto& p : programs) {
    fs::path facts = p;
    facts.replace_extension(".facts");
    auto state = s.load_state(fs::exists(facts) ? facts.string() : "", *schema);
    auto parsed = s.load_program(p.string());
    if (!state || !parsed) {
      bad = true;
      continue;
    }
    RunResult r = run_program(parsed->instructions, shared, *state);
    s.report_run(p.string(), *parsed, r);
    if (!r.ok()) {
      bad = true;
      continue;
    }
    try {
      corpus.push_back({p.stem().string(), *state, extract_trace(r.graph)});
    } catch (const Error& e) {
      s.err() << diag_line(p.string(), e.diagnostic(), SourcePos{1, 1}) << "\n";
      bad = true;
    }
  }
  if (bad) return kDiagnostics;

  CompressionResult result = compress(corpus, *schema, rounds, workers);
  std::size_t width = 7;
  for (const auto& r : result.rounds) width = std::max(width, r.macro.size() + 2);
  s.out() << std::left << std::setw(7) << "round" << std::setw(static_cast<int>(width)) << "macro" << std::setw(8)
          << "length" << std::setw(13) << "occurrences" << "gain\n";
  for (const auto& r : result.rounds)
    s.out() << std::left << std::setw(7) << r.round << std::setw(static_cast<int>(width)) << r.macro << std::setw(8)
            << r.length << std::setw(13) << r.occurrences << r.gain << "\n";
  s.out() << "total gain " << result.total_gain << "\n";

  if (!out_dir.empty()) {
    write_file(fs::path(out_dir) / "domain.gtd", print_domain(result.schema));
    for (std::size_t i = 0; i < result.corpus.size(); ++i) {
      const auto& entry = result.corpus[i];
      write_file(fs::path(out_dir) / (entry.name + ".gtp"), print_program(lower_trace(entry.trace)));
      if (!entry.initial.facts().empty())
        write_file(fs::path(out_dir) / (entry.name + ".facts"), entry.initial.canonical());
    }
  }
  return kOk;
}

inline int cmd_repl(Session& s, const std::string& domain, const std::string& init, std::istream& in) {
  require_files({domain, init});
  auto schema = s.load_domain(domain);
  if (!schema) return kDiagnostics;
  auto state = s.load_state(init, *schema);
  if (!state) return kDiagnostics;
  ProgramRunner runner(std::make_shared<const DomainSchema>(*schema), *state);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto text = trim(line);
    if (text.empty() || text[0] == ';') continue;
    if (text == ":quit") break;
    if (text == ":state") {
      s.out() << runner.graph().state().canonical();
      continue;
    }
    if (text == ":dot" || text.starts_with(":dot ")) {
      auto path = trim(text.substr(4));
      if (path.empty()) {
        s.out() << export_dot(runner.graph());
      } else {
        try {
          write_file(std::string(path), export_dot(runner.graph()));
        } catch (const IoError& e) {
          s.out() << "error: " << e.message << "\n";
        }
      }
      continue;
    }
    try {
      StepResult r = runner.execute(parse_instruction(text, line_no));
      std::string echo = r.outcome ? r.outcome->describe() : "NotInvoked";
      if (r.declared) echo = handle_name(*r.declared) + ": " + echo;
      s.out() << echo << "\n";
    } catch (const Error& e) {
      Diagnostic d = e.diagnostic();
      if (!d.pos.known()) d.pos = {line_no, 1};
      s.out() << "error: " << diag_line("<repl>", d) << "\n";
    }
  }
  return kOk;
}

// Entry point; `args` excludes the program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, std::istream& in) {
  CLI::App app{"Graph-program engine: domains, graph programs, Lispress translation, synthesis and compression", "gpe"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  std::string domain, init, out_path, program, input, mode;
  std::size_t max_ops = 4, rounds = 5, workers = 1;
  std::uint64_t budget = 1'000'000;
  long long deadline_ms = 300'000;
  bool log = false;

  auto* check = app.add_subcommand("check", "Parse and validate a domain");
  check->add_option("domain,--domain", domain, "Domain file (.gtd)")->required();

  auto* run = app.add_subcommand("run", "Execute a graph program and print the final facts");
  run->add_option("program", program, "Program (.gtp)")->required();
  run->add_option("--domain", domain, "Domain file (.gtd)")->required();
  run->add_option("--init", init, "Initial facts");
  run->add_option("--out", out_path, "Write output here instead of stdout");
  run->add_flag("--log", log, "Print the invocation log first");

  auto* dot = app.add_subcommand("dot", "Execute a graph program and print its graph as DOT");
  dot->add_option("program", program, "Program (.gtp)")->required();
  dot->add_option("--domain", domain, "Domain file (.gtd)")->required();
  dot->add_option("--init", init, "Initial facts");
  dot->add_option("--out", out_path, "Write output here instead of stdout");

  auto* trans = app.add_subcommand("trans", "Translate Lispress lines into graph programs");
  trans->add_option("input", input, "One Lispress expression per line")->required();
  trans->add_option("out_dir,--out", out_path, "Output directory");
  trans->add_option("--domain", domain, "Domain file (.gtd)");

  auto* synth = app.add_subcommand("synth", "Synthesize a program from examples");
  synth->add_option("examples", input, "Examples (.gte)")->required();
  synth->add_option("--domain", domain, "Domain file (.gtd)")->required();
  synth->add_option("--max-ops", max_ops, "Longest program to try");
  synth->add_option("--mode", mode, "Override every example's mode")->check(CLI::IsMember({"exact", "subset"}));
  synth->add_option("--out", out_path, "Write the program here");
  synth->add_option("--budget", budget, "Candidate budget");
  synth->add_option("--deadline-ms", deadline_ms, "Wall-clock limit");
  synth->add_option("--workers", workers, "Worker threads");

  auto* comp = app.add_subcommand("compress", "Induce macro operations from a corpus of programs");
  comp->add_option("corpus", input, "Directory of .gtp programs (optional <name>.facts)")->required();
  comp->add_option("--domain", domain, "Domain file (.gtd)")->required();
  comp->add_option("--rounds", rounds, "Maximum rounds");
  comp->add_option("--out", out_path, "Output directory");
  comp->add_option("--workers", workers, "Worker threads");

  auto* repl = app.add_subcommand("repl", "Interactive instruction loop");
  repl->add_option("--domain", domain, "Domain file (.gtd)")->required();
  repl->add_option("--init", init, "Initial facts");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  Session s(out, err);
  try {
    if (*check) return cmd_check(s, domain);
    if (*run) return cmd_run(s, domain, program, init, log, false, out_path);
    if (*dot) return cmd_run(s, domain, program, init, false, true, out_path);
    if (*trans) return cmd_trans(s, domain, input, out_path);
    if (*synth) {
      SynthesisConfig config;
      config.max_ops = max_ops;
      config.node_budget = budget;
      config.deadline = std::chrono::milliseconds(deadline_ms);
      config.workers = workers;
      return cmd_synth(s, domain, input, config, mode, out_path);
    }
    if (*comp) return cmd_compress(s, domain, input, rounds, workers, out_path);
    if (*repl) return cmd_repl(s, domain, init, in);
  } catch (const IoError& e) {
    err << "gpe: " << e.message << "\n";
    return kUsage;
  } catch (const fs::filesystem_error& e) {
    err << "gpe: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace gpe::cli
