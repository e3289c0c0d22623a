// opra command line: batch computation over profile files, the combinatorial
// and matching solvers over JSON instances, and the HTTP service.

#include <CLI11.hpp>
#include <httplib.h>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "opra/json_io.hpp"
#include "opra/opra.hpp"
#include "opra/service/http_api.hpp"
#include "opra/service/service.hpp"

namespace {

using opra::json;

std::string read_file(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) opra::fail(opra::ErrorCode::not_found, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const std::string& path) {
  auto j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) opra::fail(opra::ErrorCode::syntax, "'" + path + "' is not valid JSON");
  return j;
}

std::string join(const std::vector<std::string>& items, const char* sep) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : sep) + s;
  return out;
}

void print_table(std::ostream& out, const std::vector<opra::RuleResult>& results) {
  std::size_t rule_w = 4;
  std::size_t win_w = 7;
  for (const auto& r : results) {
    rule_w = std::max(rule_w, r.rule.size());
    win_w = std::max(win_w, join(r.winners, ", ").size());
  }
  out << std::left << std::setw(static_cast<int>(rule_w)) << "rule" << "  " << std::setw(static_cast<int>(win_w))
      << "winners" << "  scores\n";
  for (const auto& r : results) {
    std::string scores = "-";
    if (r.scores) {
      std::vector<std::string> parts;
      for (const auto& [id, s] : *r.scores) parts.push_back(id + "=" + s.str());
      scores = join(parts, " ");
    } else if (r.universes_explored) {
      scores = "(" + std::to_string(*r.universes_explored) + " universes)";
    }
    out << std::setw(static_cast<int>(rule_w)) << r.rule << "  " << std::setw(static_cast<int>(win_w))
        << join(r.winners, ", ") << "  " << scores << "\n";
  }
}

int exit_code(opra::ErrorCode code) {
  switch (code) {
    case opra::ErrorCode::syntax: return 65;
    case opra::ErrorCode::invalid_argument: return 64;
    case opra::ErrorCode::not_found: return 66;
    case opra::ErrorCode::conflict: return 75;
    case opra::ErrorCode::degenerate: return 70;
  }
  return 1;
}

int run_compute(const std::string& profile_path, const std::string& rules, const std::string& format) {
  const auto profile = opra::parse_profile(read_file(profile_path));
  const auto rule_list = rules.empty() ? opra::default_rules(static_cast<int>(profile.alternatives().size()))
                                       : opra::parse_rule_list(rules);
  const auto results = opra::results_table(profile, rule_list);
  if (format != "table") {
    for (const auto& r : results) std::cout << opra::to_json_value(r).dump() << "\n";
  }
  if (format == "both") std::cout << "\n";
  if (format != "jsonl") print_table(std::cout, results);
  return 0;
}

int run_analyze(const std::string& profile_path, const std::vector<std::string>& mov_rules, int k, std::uint64_t seed,
                std::int64_t brute_force_max) {
  const auto profile = opra::parse_profile(read_file(profile_path));
  opra::MovOptions mo;
  mo.brute_force_max = brute_force_max;
  for (const auto& name : mov_rules) {
    for (const auto& rule : opra::parse_rule_list(name)) {
      json rec = opra::to_json_value(opra::margin_of_victory(profile, rule, mo));
      rec["record"] = "mov";
      std::cout << rec.dump() << "\n";
    }
  }
  if (k > 0) {
    opra::MixtureOptions opts;
    opts.k = k;
    opts.seed = seed;
    json rec = opra::to_json_value(opra::fit_pl_mixture(opra::linearize(profile, seed), opts));
    rec["record"] = "mixture";
    std::cout << rec.dump() << "\n";
  }
  return 0;
}

/// {"issues": [...], "issue_order": [...], "tie_break": {...},
///  "voters": [{"cpnet": "..."} | {"votes": {"issue": "value"}}]}
int run_sequential(const std::string& path) {
  const auto doc = read_json(path);
  opra::MultiPollConfig cfg;
  for (const auto& i : opra::detail::get_field<json>(doc, "issues")) cfg.issues.push_back(opra::issue_from_json(i));
  cfg.issue_order = opra::detail::get_field<std::vector<std::string>>(doc, "issue_order");
  cfg.tie_break = opra::detail::get_field_or<std::map<std::string, std::string>>(doc, "tie_break", {});
  std::vector<opra::SequentialVoter> voters;
  for (const auto& v : opra::detail::get_field<json>(doc, "voters")) {
    if (v.contains("cpnet")) {
      voters.emplace_back(opra::parse_cpnet(opra::detail::get_field<std::string>(v, "cpnet")));
    } else {
      voters.emplace_back(opra::LiveVotes{opra::detail::get_field<std::map<std::string, std::string>>(v, "votes")});
    }
  }
  std::cout << opra::to_json_value(opra::sequential_vote(voters, cfg)).dump(2) << "\n";
  return 0;
}

int run_allocate(const std::string& path) {
  const auto instance = opra::allocation_instance_from_json(read_json(path));
  std::cout << opra::to_json_value(opra::serial_dictatorship(instance)).dump(2) << "\n";
  return 0;
}

int run_match(const std::string& path, const std::vector<std::string>& explain_for) {
  const auto instance = opra::matching_instance_from_json(read_json(path));
  const auto outcome = opra::rematch(instance);
  json out = opra::to_json_value(outcome);
  if (!explain_for.empty()) {
    json ex = json::array();
    for (const auto& s : explain_for) ex.push_back(opra::to_json_value(opra::explain(s, outcome, instance, {})));
    out["explanations"] = ex;
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

int run_serve(const std::string& log_dir, const std::string& listen, bool no_sync) {
  const auto colon = listen.rfind(':');
  if (colon == std::string::npos) opra::fail(opra::ErrorCode::invalid_argument, "--listen expects HOST:PORT");
  const auto host = listen.substr(0, colon);
  const int port = std::stoi(listen.substr(colon + 1));

  opra::service::ServiceOptions options;
  options.log_dir = log_dir;
  options.sync = !no_sync;
  opra::service::Service svc(options);
  httplib::Server server;
  opra::service::register_routes(server, svc);

  const int bound = port == 0 ? server.bind_to_any_port(host) : (server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) opra::fail(opra::ErrorCode::conflict, "cannot listen on " + listen);
  std::cout << "listening on " << host << ":" << bound << std::endl;
  server.listen_after_bind();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"opra: preference aggregation toolkit"};
  app.require_subcommand(1);

  std::string profile_path;
  std::string rules;
  std::string format = "both";
  auto* compute = app.add_subcommand("compute", "Run voting rules over a profile file");
  compute->add_option("--profile", profile_path, "Profile file ('-' for stdin)")->required();
  compute->add_option("--rules", rules, "Comma-separated rules (default: the full table)");
  compute->add_option("--format", format, "Output: jsonl, table or both")->check(CLI::IsMember({"jsonl", "table", "both"}));

  std::vector<std::string> mov_rules;
  int mixture_k = 0;
  std::uint64_t seed = 0;
  std::int64_t brute_force_max = opra::MovOptions{}.brute_force_max;
  auto* analyze = app.add_subcommand("analyze", "Margin of victory and Plackett-Luce mixture");
  analyze->add_option("--profile", profile_path, "Profile file ('-' for stdin)")->required();
  analyze->add_option("--mov", mov_rules, "Rule(s) to compute the margin of victory for");
  analyze->add_option("--mixture", mixture_k, "Number of mixture components (0 skips)");
  analyze->add_option("--seed", seed, "Seed for linearization and initialization");
  analyze->add_option("--brute-force-max", brute_force_max, "Largest electorate searched exhaustively");

  std::string input;
  auto* sequential = app.add_subcommand("sequential", "Issue-by-issue voting over CP-net and live voters");
  sequential->add_option("input", input, "JSON document")->required();
  auto* allocate = app.add_subcommand("allocate", "Serial dictatorship over a JSON allocation instance");
  allocate->add_option("input", input, "JSON document")->required();
  std::vector<std::string> explain_for;
  auto* match = app.add_subcommand("match", "Course-proposing stable matching over a JSON instance");
  match->add_option("input", input, "JSON document")->required();
  match->add_option("--explain", explain_for, "Students to explain");

  std::string log_dir;
  std::string listen = "127.0.0.1:8080";
  bool no_sync = false;
  auto* serve = app.add_subcommand("serve", "Run the HTTP/JSON service");
  serve->add_option("--log-dir", log_dir, "Event log directory")->required();
  serve->add_option("--listen", listen, "HOST:PORT (port 0 picks a free one)");
  serve->add_flag("--no-sync", no_sync, "Skip fdatasync after each record");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*compute) return run_compute(profile_path, rules, format);
    if (*analyze) return run_analyze(profile_path, mov_rules, mixture_k, seed, brute_force_max);
    if (*sequential) return run_sequential(input);
    if (*allocate) return run_allocate(input);
    if (*match) return run_match(input, explain_for);
    if (*serve) return run_serve(log_dir, listen, no_sync);
  } catch (const opra::Error& e) {
    std::cerr << "error [" << e.reason() << "]: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const json::exception& e) {
    std::cerr << "error [syntax_error]: " << e.what() << "\n";
    return 65;
  }
  return 0;
}
