// Acceptance suite: one PASS/FAIL line per primary criterion. Exits non-zero
// when any criterion fails.

#include <httplib.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include "opra/json_io.hpp"
#include "opra/opra.hpp"
#include "opra/service/http_api.hpp"
#include "oracles/combinatorial.hpp"
#include "oracles/matching.hpp"
#include "oracles/mov.hpp"
#include "oracles/plackett_luce.hpp"
#include "oracles/positional.hpp"
#include "oracles/ranked_pairs.hpp"
#include "oracles/stv.hpp"
#include "process.hpp"
#include "test_util.hpp"

using nlohmann::json;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Verdict stv_correctness() {
  std::mt19937_64 rng(20240601);
  const auto t0 = Clock::now();
  int agree = 0;
  std::string first_bad;
  for (int i = 0; i < 200; ++i) {
    const int m = 2 + static_cast<int>(rng() % 4);
    const int n = 1 + static_cast<int>(rng() % 20);
    const auto raw = oracle::random_profile(m, n, 0.25, rng);
    const auto got = opra::stv_put_winners(oracle::to_profile(raw)).winners;
    if (got == oracle::names(oracle::stv_put_bruteforce(raw))) {
      ++agree;
    } else if (first_bad.empty()) {
      first_bad = " first mismatch:\n" + opra::serialize_profile(oracle::to_profile(raw));
    }
  }
  const double secs = seconds_since(t0);
  return {agree == 200 && secs < 30.0,
          std::to_string(agree) + "/200 profiles agree, " + fmt("%.2f s (limit 30 s)", secs) + first_bad};
}

Verdict ranked_pairs_correctness() {
  std::mt19937_64 rng(20240602);
  int agree = 0;
  for (int i = 0; i < 200; ++i) {
    const int m = 2 + static_cast<int>(rng() % 3);
    const int n = 1 + static_cast<int>(rng() % 9);
    const auto raw = oracle::random_profile(m, n, 0.2, rng);
    if (opra::ranked_pairs_put_winners(oracle::to_profile(raw)).winners == oracle::names(oracle::ranked_pairs_put_bruteforce(raw))) {
      ++agree;
    }
  }
  return {agree == 200, std::to_string(agree) + "/200 profiles agree"};
}

Verdict mov_exactness() {
  std::mt19937_64 rng(20240603);
  int agree = 0;
  int total = 0;
  for (int i = 0; i < 100; ++i) {
    const int m = 2 + static_cast<int>(rng() % 3);
    const int n = 1 + static_cast<int>(rng() % 6);
    const auto raw = oracle::random_profile(m, n, 0.2, rng);
    const auto profile = oracle::to_profile(raw);
    for (auto [rule, scoring] : {std::pair{opra::Rule::plurality(), oracle::Scoring::plurality},
                                 std::pair{opra::Rule::borda(), oracle::Scoring::borda}}) {
      ++total;
      const auto expect = oracle::mov_bruteforce(raw, [s = scoring](const oracle::Profile& q) {
        return oracle::positional_winners(q, s);
      });
      const auto got = opra::margin_of_victory(profile, rule);
      if (got.mov == expect && got.method == opra::MovMethod::exact_greedy) ++agree;
    }
  }
  return {agree == total, std::to_string(agree) + "/" + std::to_string(total) + " (profile, rule) pairs exact"};
}

Verdict figure2() {
  TempDir dir;
  opra::service::ServiceOptions options;
  options.log_dir = dir.path();
  opra::service::Service svc(options);
  httplib::Server server;
  opra::service::register_routes(server, svc);
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client client("127.0.0.1", port);

  Verdict v;
  const auto profile = opra::parse_profile(fixture("fig2.profile"));
  json alts = json::array();
  for (const auto& a : profile.alternatives()) alts.push_back({{"id", a.id}, {"label", a.label}});
  auto created = client.Post("/polls", json{{"title", "Fig. 2"}, {"alternatives", alts}}.dump(), "application/json");
  const std::string id = json::parse(created->body).at("id");
  int voter = 0;
  for (const auto& b : profile.ballots()) {
    for (int i = 0; i < b.weight; ++i) {
      client.Post("/polls/" + id + "/ballots", {{"Authorization", "Bearer voter-" + std::to_string(voter++)}},
                  json{{"order", b.order.groups()}}.dump(), "application/json");
    }
  }
  auto res = client.Get("/polls/" + id + "/results?seed=1");
  server.stop();
  thread.join();
  if (!res || res->status != 200) return {false, "results request failed"};
  const auto table = json::parse(res->body).at("snapshot").at("results_table");
  std::map<std::string, json> by_rule;
  for (const auto& row : table) by_rule[row.at("rule")] = row.at("winners");
  v.pass = by_rule["plurality"] == json({"cherry"}) && by_rule["borda"] == json({"apple"}) &&
           by_rule["veto"] == json({"apple"});
  v.detail = "plurality=" + by_rule["plurality"].dump() + " borda=" + by_rule["borda"].dump() +
             " veto=" + by_rule["veto"].dump() + " over " + std::to_string(voter) + " API ballots";
  return v;
}

opra::RankingData sample_data(const std::vector<std::vector<double>>& gammas, const std::vector<int>& counts,
                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  opra::RankingData d;
  for (std::size_t i = 0; i < gammas[0].size(); ++i) d.ids.push_back(std::string(1, static_cast<char>('a' + i)));
  for (std::size_t z = 0; z < gammas.size(); ++z) {
    for (int i = 0; i < counts[z]; ++i) d.rankings.push_back({oracle::sample_pl(gammas[z], rng), 1.0});
  }
  std::shuffle(d.rankings.begin(), d.rankings.end(), rng);
  return d;
}

double l1(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

Verdict plackett_luce() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240605);

  double worst_mle = 0.0;
  for (int i = 0; i < 25; ++i) {
    const int wins = 1 + static_cast<int>(rng() % 30);
    const int losses = 1 + static_cast<int>(rng() % 30);
    opra::RankingData d{{"a", "b"}, {{{0, 1}, static_cast<double>(wins)}, {{1, 0}, static_cast<double>(losses)}}};
    const auto fit = opra::fit_plackett_luce(d);
    worst_mle = std::max(worst_mle, std::abs(fit.params.gamma[0] - static_cast<double>(wins) / (wins + losses)));
  }

  double worst_drop = 0.0;
  for (std::uint64_t run = 0; run < 50; ++run) {
    const int m = 3 + static_cast<int>(run % 3);
    std::vector<double> g1(static_cast<std::size_t>(m));
    std::vector<double> g2(static_cast<std::size_t>(m));
    for (int a = 0; a < m; ++a) {
      g1[static_cast<std::size_t>(a)] = 1.0 + a;
      g2[static_cast<std::size_t>(a)] = static_cast<double>(m - a);
    }
    const auto data = sample_data({g1, g2}, {30 + static_cast<int>(run), 30}, 1000 + run);
    opra::MixtureOptions opts;
    opts.k = 2 + static_cast<int>(run % 2);
    opts.seed = run;
    const auto mix = opra::fit_pl_mixture(data, opts);
    for (const auto& trace : mix.restart_traces) {
      for (std::size_t t = 1; t < trace.size(); ++t) worst_drop = std::max(worst_drop, trace[t - 1] - trace[t]);
    }
  }

  const std::vector<double> t1{0.55, 0.25, 0.12, 0.08};
  const std::vector<double> t2{0.08, 0.12, 0.25, 0.55};
  const auto data = sample_data({t1, t2}, {2500, 2500}, 20240606);
  opra::MixtureOptions opts;
  opts.k = 2;
  opts.seed = 11;
  const auto mix = opra::fit_pl_mixture(data, opts);
  const bool swap = l1(mix.components[0].gamma, t1) + l1(mix.components[1].gamma, t2) >
                    l1(mix.components[0].gamma, t2) + l1(mix.components[1].gamma, t1);
  const double e1 = l1(mix.components[swap ? 1 : 0].gamma, t1);
  const double e2 = l1(mix.components[swap ? 0 : 1].gamma, t2);
  const double ew = std::abs(mix.weights[swap ? 1 : 0] - 0.5);
  const double secs = seconds_since(t0);

  const bool pass = worst_mle <= 1e-6 && worst_drop <= 1e-9 && e1 <= 0.1 && e2 <= 0.1 && ew <= 0.05 && secs < 60.0;
  return {pass, fmt("2-alt MLE err %.2e; ", worst_mle) + fmt("max EM drop %.2e over 50 runs; ", worst_drop) +
                    fmt("recovery L1 %.4f/", e1) + fmt("%.4f, ", e2) + fmt("weight err %.4f; ", ew) + fmt("%.2f s", secs)};
}

Verdict stable_matching() {
  std::mt19937_64 rng(20240607);
  int stable = 0;
  int feasible = 0;
  int explained = 0;
  int optimal = 0;
  int enumerated = 0;
  std::string first_bad;
  auto note = [&](const std::string& what) {
    if (first_bad.empty()) first_bad = "; first failure: " + what;
  };
  auto check = [&](const opra::MatchingInstance& inst, bool enumerate) {
    const auto out = opra::stable_match(inst);
    const auto feas = oracle::check_feasible(inst, out.assignment);
    feas.empty() ? void(++feasible) : note(feas);
    oracle::blocking_pairs(inst, out.assignment).empty() ? void(++stable) : note("blocking pair");
    bool all_ok = true;
    std::vector<std::string> query;
    for (const auto& c : inst.courses) query.push_back(c.course);
    for (const auto& s : inst.students) {
      const auto err = oracle::verify_explanation(inst, out, opra::explain(s.student, out, inst, query));
      if (!err.empty()) {
        note(err);
        all_ok = false;
      }
    }
    if (all_ok) ++explained;
    if (!enumerate) return;
    ++enumerated;
    const auto all = oracle::all_stable(inst);
    bool best = std::find(all.begin(), all.end(), out.assignment) != all.end();
    for (const auto& other : all) {
      for (const auto& s : inst.students) {
        if (oracle::student_rank(s, other.at(s.student)) > oracle::student_rank(s, out.assignment.at(s.student))) best = false;
      }
    }
    best ? void(++optimal) : note("not course-optimal");
  };
  for (int i = 0; i < 500; ++i) {
    const auto inst = oracle::random_instance(6, 10, rng, 0.1);
    check(inst, inst.courses.size() <= 4 && inst.students.size() <= 6);
  }
  for (int i = 0; i < 300; ++i) check(oracle::random_instance(4, 6, rng, 0.1), true);
  const int total = 800;
  const bool pass = stable == total && feasible == total && explained == total && optimal == enumerated;
  return {pass, std::to_string(stable) + "/" + std::to_string(total) + " stable, " + std::to_string(feasible) +
                    " feasible, " + std::to_string(explained) + " fully explained, " + std::to_string(optimal) + "/" +
                    std::to_string(enumerated) + " course-optimal by enumeration" + first_bad};
}

Verdict sequential_voting() {
  std::mt19937_64 rng(20240608);
  int agree = 0;
  for (int family = 0; family < 100; ++family) {
    TempDir dir;
    opra::service::ServiceOptions options;
    options.log_dir = dir.path();
    options.sync = false;
    opra::service::Service svc(options);

    const int p = 1 + static_cast<int>(rng() % 3);
    const int n = 1 + static_cast<int>(rng() % 5);
    std::vector<opra::Issue> issues;
    for (int i = 0; i < p; ++i) issues.push_back(opra::Issue{"i" + std::to_string(i)});
    std::vector<int> order(static_cast<std::size_t>(p));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    opra::MultiPollConfig cfg;
    cfg.issues = issues;
    for (int i : order) cfg.issue_order.push_back(issues[static_cast<std::size_t>(i)].id);
    for (const auto& is : issues) {
      if (rng() % 2) cfg.tie_break[is.id] = "yes";
    }
    json issue_ids = json::array();
    for (const auto& is : issues) issue_ids.push_back(is.id);
    const auto poll = svc.create_poll(
        {{"kind", "multi_issue"}, {"issues", issue_ids}, {"issue_order", cfg.issue_order}, {"tie_break", cfg.tie_break}});
    const std::string id = poll.at("id");

    std::vector<opra::SequentialVoter> voters;
    for (int v = 0; v < n; ++v) {
      const auto net = oracle::to_cpnet(oracle::random_cpnet_voter(p, order, rng), issues);
      voters.emplace_back(net);
      svc.submit_ballot(id, "voter" + std::to_string(v), {{"cpnet", opra::format_cpnet(net)}});
    }
    for (int step = 0; step < p; ++step) svc.advance_multipoll(id, false);
    const auto decided = svc.get_poll(id).at("decided").get<std::map<std::string, std::string>>();
    if (decided == opra::sequential_vote(voters, cfg).assignment) ++agree;
  }
  return {agree == 100, std::to_string(agree) + "/100 CP-net families agree"};
}

Verdict durability() {
  TempDir dir;
  std::string before;
  json snapshot;
  json ballots;
  json outcome;
  try {
    {
      ServeProcess serve(OPRA_CLI_PATH, dir.path().string());
      httplib::Client c("127.0.0.1", serve.port());
      auto post = [&](const std::string& path, const json& body) {
        return json::parse(c.Post(path, body.dump(), "application/json")->body);
      };
      post("/polls", {{"alternatives", {"apple", "banana", "cherry"}}});
      post("/polls/p1/ballots", {{"voter", "v1"}, {"order", {{"apple"}, {"banana"}}}});
      post("/polls/p1/ballots", {{"voter", "v2"}, {"order", {{"cherry"}}}});
      post("/polls/p1/ballots", {{"voter", "v1"}, {"order", {{"banana"}}}});
      post("/polls/p1/ballots", {{"voter", "v3"}, {"order", {{"cherry"}, {"apple"}}}});
      snapshot = json::parse(c.Get("/polls/p1/results?seed=9")->body);
      post("/polls/p1/close", json::object());
      post("/polls", {{"kind", "multi_issue"}, {"issues", {"x", "y"}}, {"issue_order", {"x", "y"}}});
      post("/polls/p2/ballots", {{"voter", "a"}, {"issue", "x"}, {"value", "yes"}});
      post("/polls/p2/advance", json::object());
      post("/matchings", {{"instance", json::parse(read_text(std::string(OPRA_FIXTURE_DIR) + "/../../samples/matching.json"))}});
      outcome = post("/matchings/m1/run", json::object());
      post("/polls/p2/ballots", {{"voter", "a"}, {"issue", "y"}, {"value", "no"}});
      before = json::parse(c.Get("/state/digest")->body).at("digest");
      serve.kill9();
    }
    ServeProcess serve(OPRA_CLI_PATH, dir.path().string());
    httplib::Client c("127.0.0.1", serve.port());
    const std::string after = json::parse(c.Get("/state/digest")->body).at("digest");
    const auto cached = json::parse(c.Get("/polls/p1/results?seed=9")->body);
    const auto replayed_outcome = json::parse(c.Get("/matchings/m1/outcome")->body);
    const bool snap_ok = cached.at("cached").get<bool>() == false || cached.at("digest") == snapshot.at("digest");
    const bool same_snapshot = cached.at("snapshot") == snapshot.at("snapshot");
    const bool pass = before == after && snap_ok && same_snapshot && replayed_outcome == outcome;
    return {pass, "state digest " + before.substr(0, 12) + (before == after ? " == " : " != ") + after.substr(0, 12) +
                      ", snapshot " + (same_snapshot ? "identical" : "differs") + ", matching run " +
                      (replayed_outcome == outcome ? "identical" : "differs") + " after SIGKILL"};
  } catch (const std::exception& e) {
    return {false, std::string("exception: ") + e.what()};
  }
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"stv_put_correctness", stv_correctness},
      {"ranked_pairs_put_correctness", ranked_pairs_correctness},
      {"mov_exactness", mov_exactness},
      {"figure2_service_path", figure2},
      {"plackett_luce", plackett_luce},
      {"stable_matching", stable_matching},
      {"sequential_voting_service", sequential_voting},
      {"durability_kill_restart", durability},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failed;
    std::cout << (v.pass ? "PASS " : "FAIL ") << name << ": " << v.detail << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
