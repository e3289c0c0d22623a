#pragma once

// Poll lifecycle, ballot intake, results snapshots, multi-issue sequencing
// and matching sessions, event-sourced onto an append-only log. Every state
// change is written as one log record and then applied; startup replays the
// log through the same apply path.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "opra/cpnet.hpp"
#include "opra/error.hpp"
#include "opra/json_io.hpp"
#include "opra/matching.hpp"
#include "opra/mixture.hpp"
#include "opra/mov.hpp"
#include "opra/plackett_luce.hpp"
#include "opra/preference.hpp"
#include "opra/profile_format.hpp"
#include "opra/rules.hpp"
#include "opra/sequential.hpp"
#include "opra/serial_dictatorship.hpp"
#include "opra/service/digest.hpp"
#include "opra/service/event_log.hpp"

namespace opra::service {

using nlohmann::json;

enum class PollKind { single, multi_issue, allocation, matching };
enum class UiMode { one_column, two_column, sliders, stars, yes_no };
enum class PollStatus { open, closed };

inline std::string_view to_string(PollKind k) {
  switch (k) {
    case PollKind::single: return "single";
    case PollKind::multi_issue: return "multi_issue";
    case PollKind::allocation: return "allocation";
    case PollKind::matching: return "matching";
  }
  return "single";
}

inline std::string_view to_string(UiMode m) {
  switch (m) {
    case UiMode::one_column: return "one_column";
    case UiMode::two_column: return "two_column";
    case UiMode::sliders: return "sliders";
    case UiMode::stars: return "stars";
    case UiMode::yes_no: return "yes_no";
  }
  return "one_column";
}

inline PollKind parse_kind(const std::string& s) {
  if (s == "single") return PollKind::single;
  if (s == "multi_issue") return PollKind::multi_issue;
  if (s == "allocation") return PollKind::allocation;
  if (s == "matching") return PollKind::matching;
  fail(ErrorCode::invalid_argument, "invalid_definition", "unknown poll kind '" + s + "'");
}

inline UiMode parse_ui_mode(const std::string& s) {
  if (s == "one_column") return UiMode::one_column;
  if (s == "two_column") return UiMode::two_column;
  if (s == "sliders") return UiMode::sliders;
  if (s == "stars") return UiMode::stars;
  if (s == "yes_no") return UiMode::yes_no;
  fail(ErrorCode::invalid_argument, "invalid_definition", "unknown ui_mode '" + s + "'");
}

struct Poll {
  std::string id;
  std::string title;
  std::string created_by;
  PollKind kind = PollKind::single;
  UiMode ui_mode = UiMode::one_column;
  PollStatus status = PollStatus::open;

  std::vector<Alternative> alternatives;  // single
  std::vector<Rule> rules;
  std::vector<Rule> mov_rules;
  int mixture_k = 2;

  MultiPollConfig multipoll;  // multi_issue
  std::map<std::string, std::vector<std::string>> dependencies;

  AllocationInstance allocation;  // allocation (prefs arrive as ballots)
  std::string session;            // matching

  json definition;  // normalized definition as persisted
};

struct BallotRecord {
  std::string poll;
  std::string voter;
  std::int64_t revision = 0;
  std::int64_t submitted_at = 0;
  std::int64_t seq = 0;
  json payload;
  std::optional<WeakOrder> order;  // derived order (single polls)
};

struct StoredSnapshot {
  std::int64_t id = 0;
  std::int64_t computed_at = 0;  // log sequence number of the snapshot record
  std::uint64_t seed = 0;
  json body;
  std::string digest;
};

struct Decision {
  IssueTally tally;
  bool forced = false;
  std::vector<std::string> missing;
  std::int64_t seq = 0;
};

struct MatchingRun {
  std::int64_t run = 0;
  std::int64_t seq = 0;
  json instance;
  json outcome;
};

struct MatchingSession {
  std::string id;
  std::string title;
  json instance;  // null until provided
  std::vector<MatchingRun> runs;
};

struct ServiceOptions {
  std::filesystem::path log_dir;
  bool sync = true;
  MovOptions mov;
  int mixture_restarts = 5;
  double mixture_tol = 1e-8;
  int mixture_max_iters = 500;
};

class Service {
 public:
  explicit Service(ServiceOptions options) : options_(std::move(options)), log_(options_.log_dir, options_.sync) {
    for (const auto& event : log_.replay()) apply(event);
  }

  // -- polls ---------------------------------------------------------------

  json create_poll(const json& definition) {
    std::lock_guard lock(mu_);
    const std::string id = "p" + std::to_string(next_poll_);
    json normalized = normalize_definition(definition, id);
    commit({{"type", "poll_created"}, {"poll", normalized}});
    return poll_json(polls_.at(id));
  }

  json get_poll(const std::string& id) const {
    std::lock_guard lock(mu_);
    return poll_json(require_poll(id));
  }

  /// Mints an opaque voter token. Tokens are not tracked; one token stands
  /// for one voter.
  json join(const std::string& id) const {
    std::lock_guard lock(mu_);
    require_poll(id);
    std::random_device rd;
    std::uniform_int_distribution<int> hex(0, 15);
    std::string token = "v-";
    for (int i = 0; i < 24; ++i) token += "0123456789abcdef"[hex(rd)];
    return {{"poll", id}, {"token", token}};
  }

  json submit_ballot(const std::string& id, const std::string& voter, const json& payload) {
    std::lock_guard lock(mu_);
    const auto& state = require_poll(id);
    if (state.poll.status != PollStatus::open) fail(ErrorCode::conflict, "poll_closed", "poll '" + id + "' is closed");
    if (voter.empty()) fail(ErrorCode::invalid_argument, "missing_voter", "a voter token is required");

    json event{{"type", "ballot"}, {"poll", id}, {"voter", voter}};
    auto [stored, order] = validate_payload(state, voter, payload);
    event["payload"] = stored;
    if (order) event["order"] = to_json_value(*order);
    auto it = state.revisions.find(voter);
    event["revision"] = it == state.revisions.end() ? 1 : it->second.back().revision + 1;
    event["submitted_at"] = now_ms();
    commit(event);

    if (state.poll.kind == PollKind::matching) apply_application(state, voter, stored);
    return ballot_json(polls_.at(id).revisions.at(voter).back());
  }

  json close_poll(const std::string& id) {
    std::lock_guard lock(mu_);
    const auto& state = require_poll(id);
    if (state.poll.status == PollStatus::closed) fail(ErrorCode::conflict, "poll_closed", "poll '" + id + "' is already closed");
    commit({{"type", "poll_closed"}, {"poll", id}});
    return poll_json(polls_.at(id));
  }

  /// Freezes the effective ballots and computes a snapshot. Closed polls
  /// return the cached snapshot for the same seed when there is one.
  json compute_results(const std::string& id, std::uint64_t seed) {
    PollState frozen;
    {
      std::lock_guard lock(mu_);
      const auto& state = require_poll(id);
      if (state.poll.status == PollStatus::closed) {
        for (const auto& snap : state.snapshots) {
          if (snap.seed == seed) return snapshot_json(snap, true);
        }
      }
      frozen = state;
    }
    json body = compute_body(frozen, seed);
    const std::string digest = sha256_hex(body.dump());

    std::lock_guard lock(mu_);
    auto& state = polls_.at(id);
    const std::int64_t snapshot_id = static_cast<std::int64_t>(state.snapshots.size()) + 1;
    commit({{"type", "snapshot"}, {"poll", id}, {"snapshot_id", snapshot_id}, {"seed", seed}, {"body", body}, {"digest", digest}});
    return snapshot_json(state.snapshots.back(), false);
  }

  /// Decides the current issue of a multi-issue poll. CP-net voters vote
  /// from their CPT given the decided prefix; live voters must have a vote
  /// recorded for this issue unless `force` is set, in which case missing
  /// voters abstain.
  json advance_multipoll(const std::string& id, bool force) {
    std::lock_guard lock(mu_);
    const auto& state = require_poll(id);
    if (state.poll.kind != PollKind::multi_issue) {
      fail(ErrorCode::conflict, "wrong_kind", "poll '" + id + "' is not a multi-issue poll");
    }
    if (state.poll.status != PollStatus::open) fail(ErrorCode::conflict, "poll_closed", "poll '" + id + "' is closed");
    const auto& cfg = state.poll.multipoll;
    const auto& issue_id = cfg.issue_order.at(state.decisions.size());
    const auto& issue = cfg.issue(issue_id);
    const auto decided = decided_assignment(state);

    std::vector<int> votes;
    std::vector<std::string> missing;
    for (const auto& voter : state.voter_order) {
      const auto& record = state.revisions.at(voter).back();
      std::optional<std::string> choice;
      if (record.payload.contains("cpnet")) {
        choice = local_vote(parse_cpnet(record.payload.at("cpnet").get<std::string>()), issue_id, decided);
      } else if (record.payload.at("issue").get<std::string>() == issue_id) {
        choice = record.payload.at("value").get<std::string>();
      }
      if (choice) {
        votes.push_back(issue.value_index(*choice));
      } else {
        missing.push_back(voter);
      }
    }
    if (!missing.empty() && !force) {
      std::string names;
      for (const auto& m : missing) names += (names.empty() ? "" : ",") + m;
      fail(ErrorCode::conflict, "missing_live_votes", "live voters have not voted on '" + issue_id + "': " + names);
    }
    const auto tally = tally_issue(cfg, issue, votes);
    commit({{"type", "issue_decided"}, {"poll", id}, {"tally", to_json_value(tally)}, {"forced", force}, {"missing", missing}});
    if (polls_.at(id).decisions.size() == cfg.issue_order.size()) commit({{"type", "poll_closed"}, {"poll", id}});
    return decision_json(polls_.at(id), polls_.at(id).decisions.size() - 1);
  }

  json get_issue(const std::string& id, const std::string& issue_id) const {
    std::lock_guard lock(mu_);
    const auto& state = require_poll(id);
    if (state.poll.kind != PollKind::multi_issue) {
      fail(ErrorCode::conflict, "wrong_kind", "poll '" + id + "' is not a multi-issue poll");
    }
    const auto& order = state.poll.multipoll.issue_order;
    auto pos = std::find(order.begin(), order.end(), issue_id);
    if (pos == order.end()) fail(ErrorCode::not_found, "unknown_issue", "poll '" + id + "' has no issue '" + issue_id + "'");
    const auto index = static_cast<std::size_t>(pos - order.begin());
    json out{{"poll", id}, {"issue", to_json_value(state.poll.multipoll.issue(issue_id))}, {"position", index}};
    if (index < state.decisions.size()) {
      out["state"] = "decided";
      out["decision"] = decision_json(state, index);
    } else if (index == state.decisions.size() && state.poll.status == PollStatus::open) {
      out["state"] = "open";
      std::int64_t live = 0;
      for (const auto& voter : state.voter_order) {
        const auto& p = state.revisions.at(voter).back().payload;
        if (p.contains("issue") && p.at("issue") == issue_id) ++live;
      }
      out["live_votes"] = live;
    } else {
      out["state"] = "pending";
    }
    return out;
  }

  // -- matching sessions ---------------------------------------------------

  json create_matching(const json& body) {
    std::lock_guard lock(mu_);
    const std::string id = "m" + std::to_string(next_matching_);
    json instance = nullptr;
    if (body.is_object() && body.contains("instance") && !body.at("instance").is_null()) {
      instance = to_json_value(matching_instance_from_json(body.at("instance")));
    }
    commit({{"type", "matching_created"},
            {"session", id},
            {"title", detail::get_field_or<std::string>(body, "title", "")},
            {"instance", instance}});
    return session_json(matchings_.at(id));
  }

  json get_matching(const std::string& id) const {
    std::lock_guard lock(mu_);
    return session_json(require_session(id));
  }

  /// Replaces the session's instance. Structure is checked here; semantic
  /// problems (capacity vs pins, ranges) surface when the matching runs.
  json put_instance(const std::string& id, const json& instance) {
    std::lock_guard lock(mu_);
    require_session(id);
    commit({{"type", "matching_instance"}, {"session", id}, {"instance", to_json_value(matching_instance_from_json(instance))}});
    return session_json(matchings_.at(id));
  }

  json run_matching(const std::string& id) {
    std::lock_guard lock(mu_);
    const auto& session = require_session(id);
    if (session.instance.is_null()) fail(ErrorCode::conflict, "no_instance", "matching session '" + id + "' has no instance");
    const auto instance = matching_instance_from_json(session.instance);
    const auto outcome = rematch(instance);
    const auto run = static_cast<std::int64_t>(session.runs.size()) + 1;
    commit({{"type", "matching_run"}, {"session", id}, {"run", run}, {"instance", session.instance}, {"outcome", to_json_value(outcome)}});
    return run_json(matchings_.at(id).runs.back());
  }

  json get_outcome(const std::string& id) const {
    std::lock_guard lock(mu_);
    const auto& session = require_session(id);
    if (session.runs.empty()) fail(ErrorCode::not_found, "no_outcome", "matching session '" + id + "' has not run yet");
    return run_json(session.runs.back());
  }

  json explanation(const std::string& id, const std::string& student, const std::vector<std::string>& query = {}) const {
    std::lock_guard lock(mu_);
    const auto& session = require_session(id);
    if (session.runs.empty()) fail(ErrorCode::not_found, "no_outcome", "matching session '" + id + "' has not run yet");
    const auto& run = session.runs.back();
    const auto instance = matching_instance_from_json(run.instance);
    const auto outcome = matching_outcome_from_json(run.outcome);
    json out = to_json_value(explain(student, outcome, instance, query));
    out["run"] = run.run;
    return out;
  }

  // -- inspection ----------------------------------------------------------

  /// Effective ballots (latest revision per voter) in first-submission order.
  std::vector<BallotRecord> effective_ballots(const std::string& id) const {
    std::lock_guard lock(mu_);
    const auto& state = require_poll(id);
    std::vector<BallotRecord> out;
    for (const auto& voter : state.voter_order) out.push_back(state.revisions.at(voter).back());
    return out;
  }

  std::vector<BallotRecord> revisions(const std::string& id, const std::string& voter) const {
    std::lock_guard lock(mu_);
    const auto& state = require_poll(id);
    auto it = state.revisions.find(voter);
    return it == state.revisions.end() ? std::vector<BallotRecord>{} : it->second;
  }

  PreferenceProfile frozen_profile(const std::string& id) const {
    std::lock_guard lock(mu_);
    return freeze_profile(require_poll(id));
  }

  /// Digest over polls, effective ballots, decisions, snapshots and matching
  /// runs; equal digests mean equal durable state.
  std::string state_digest() const {
    std::lock_guard lock(mu_);
    json all = json::object();
    for (const auto& [id, state] : polls_) {
      json ballots = json::array();
      for (const auto& voter : state.voter_order) ballots.push_back(ballot_json(state.revisions.at(voter).back()));
      json snaps = json::array();
      for (const auto& s : state.snapshots) snaps.push_back({{"id", s.id}, {"seed", s.seed}, {"digest", s.digest}});
      json decisions = json::array();
      for (std::size_t i = 0; i < state.decisions.size(); ++i) decisions.push_back(decision_json(state, i));
      all["polls"][id] = {{"poll", poll_json(state)}, {"ballots", ballots}, {"snapshots", snaps}, {"decisions", decisions}};
    }
    for (const auto& [id, session] : matchings_) {
      json runs = json::array();
      for (const auto& r : session.runs) runs.push_back(run_json(r));
      all["matchings"][id] = {{"instance", session.instance}, {"runs", runs}};
    }
    return sha256_hex(all.dump());
  }

  std::int64_t last_seq() const {
    std::lock_guard lock(mu_);
    return seq_;
  }

 private:
  struct PollState {
    Poll poll;
    std::map<std::string, std::vector<BallotRecord>> revisions;
    std::vector<std::string> voter_order;
    std::vector<StoredSnapshot> snapshots;
    std::vector<Decision> decisions;
  };

  static std::int64_t now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch()).count();
  }

  void commit(json event) {
    event["seq"] = seq_ + 1;
    log_.append(event);
    apply(event);
  }

  void apply(const json& e) {
    seq_ = e.at("seq").get<std::int64_t>();
    const auto type = e.at("type").get<std::string>();
    if (type == "poll_created") {
      PollState state;
      state.poll = poll_from_definition(e.at("poll"));
      const auto id = state.poll.id;
      next_poll_ = std::max(next_poll_, static_cast<std::int64_t>(std::stoll(id.substr(1))) + 1);
      polls_[id] = std::move(state);
    } else if (type == "ballot") {
      auto& state = polls_.at(e.at("poll").get<std::string>());
      BallotRecord r;
      r.poll = state.poll.id;
      r.voter = e.at("voter").get<std::string>();
      r.revision = e.at("revision").get<std::int64_t>();
      r.submitted_at = e.at("submitted_at").get<std::int64_t>();
      r.seq = seq_;
      r.payload = e.at("payload");
      if (e.contains("order")) r.order = weak_order_from_json(e.at("order"));
      auto& revs = state.revisions[r.voter];
      if (revs.empty()) state.voter_order.push_back(r.voter);
      revs.push_back(std::move(r));
    } else if (type == "poll_closed") {
      polls_.at(e.at("poll").get<std::string>()).poll.status = PollStatus::closed;
    } else if (type == "snapshot") {
      auto& state = polls_.at(e.at("poll").get<std::string>());
      state.snapshots.push_back({e.at("snapshot_id").get<std::int64_t>(), seq_, e.at("seed").get<std::uint64_t>(),
                                 e.at("body"), e.at("digest").get<std::string>()});
    } else if (type == "issue_decided") {
      auto& state = polls_.at(e.at("poll").get<std::string>());
      state.decisions.push_back({issue_tally_from_json(e.at("tally")), e.at("forced").get<bool>(),
                                 e.at("missing").get<std::vector<std::string>>(), seq_});
    } else if (type == "matching_created") {
      MatchingSession s;
      s.id = e.at("session").get<std::string>();
      s.title = e.at("title").get<std::string>();
      s.instance = e.at("instance");
      next_matching_ = std::max(next_matching_, static_cast<std::int64_t>(std::stoll(s.id.substr(1))) + 1);
      matchings_[s.id] = std::move(s);
    } else if (type == "matching_instance") {
      matchings_.at(e.at("session").get<std::string>()).instance = e.at("instance");
    } else if (type == "matching_run") {
      matchings_.at(e.at("session").get<std::string>())
          .runs.push_back({e.at("run").get<std::int64_t>(), seq_, e.at("instance"), e.at("outcome")});
    } else {
      fail(ErrorCode::syntax, "unknown_event", "unknown event type '" + type + "'");
    }
  }

  const PollState& require_poll(const std::string& id) const {
    auto it = polls_.find(id);
    if (it == polls_.end()) fail(ErrorCode::not_found, "unknown_poll", "unknown poll '" + id + "'");
    return it->second;
  }

  const MatchingSession& require_session(const std::string& id) const {
    auto it = matchings_.find(id);
    if (it == matchings_.end()) fail(ErrorCode::not_found, "unknown_session", "unknown matching session '" + id + "'");
    return it->second;
  }

  // -- definitions -----------------------------------------------------------

  json normalize_definition(const json& d, const std::string& id) const {
    if (!d.is_object()) fail(ErrorCode::syntax, "invalid_definition", "poll definition must be an object");
    try {
      const auto kind = parse_kind(detail::get_field_or<std::string>(d, "kind", "single"));
      const auto ui = parse_ui_mode(detail::get_field_or<std::string>(d, "ui_mode", "one_column"));
      if (kind != PollKind::single && ui != UiMode::one_column && ui != UiMode::two_column) {
        fail(ErrorCode::invalid_argument, "invalid_definition", "ui_mode '" + std::string(to_string(ui)) +
                                                                    "' is only available for single polls");
      }
      json out{{"id", id},
               {"title", detail::get_field_or<std::string>(d, "title", "")},
               {"created_by", detail::get_field_or<std::string>(d, "created_by", "")},
               {"kind", to_string(kind)},
               {"ui_mode", to_string(ui)}};

      if (kind == PollKind::single) {
        json alts = json::array();
        std::vector<Alternative> parsed;
        for (const auto& a : detail::get_field<json>(d, "alternatives")) {
          Alternative alt;
          if (a.is_string()) {
            alt.id = alt.label = a.get<std::string>();
          } else {
            alt.id = detail::get_field<std::string>(a, "id");
            alt.label = detail::get_field_or<std::string>(a, "label", alt.id);
          }
          parsed.push_back(alt);
          alts.push_back({{"id", alt.id}, {"label", alt.label}});
        }
        PreferenceProfile check(parsed);  // validates ids
        if (parsed.size() < 2) fail(ErrorCode::invalid_argument, "invalid_definition", "a poll needs at least 2 alternatives");
        const int m = static_cast<int>(parsed.size());
        std::vector<Rule> rules;
        if (d.contains("rules")) {
          for (const auto& r : d.at("rules")) rules.push_back(Rule::parse(r.get<std::string>()));
        } else {
          rules = default_rules(m);
        }
        std::vector<Rule> mov_rules = rules;
        if (d.contains("mov_rules")) {
          mov_rules.clear();
          for (const auto& r : d.at("mov_rules")) mov_rules.push_back(Rule::parse(r.get<std::string>()));
        }
        json rule_names = json::array();
        for (const auto& r : rules) {
          if (r.positional()) r.score_vector(m);  // rejects k outside 1..m-1
          rule_names.push_back(r.name());
        }
        json mov_names = json::array();
        for (const auto& r : mov_rules) {
          if (r.positional()) r.score_vector(m);
          mov_names.push_back(r.name());
        }
        const int k = detail::get_field_or<int>(d, "mixture_k", 2);
        if (k < 0) fail(ErrorCode::invalid_argument, "invalid_definition", "mixture_k must be >= 0 (0 disables)");
        out["alternatives"] = alts;
        out["rules"] = rule_names;
        out["mov_rules"] = mov_names;
        out["mixture_k"] = k;
      } else if (kind == PollKind::multi_issue) {
        MultiPollConfig cfg;
        json issues = json::array();
        for (const auto& i : detail::get_field<json>(d, "issues")) {
          cfg.issues.push_back(issue_from_json(i));
          issues.push_back(to_json_value(cfg.issues.back()));
        }
        cfg.issue_order = detail::get_field<std::vector<std::string>>(d, "issue_order");
        cfg.tie_break = detail::get_field_or<std::map<std::string, std::string>>(d, "tie_break", {});
        cfg.validate();
        const auto deps = detail::get_field_or<std::map<std::string, std::vector<std::string>>>(d, "dependencies", {});
        if (!deps.empty()) {
          CPNet templ(cfg.issues);
          for (const auto& [child, parents] : deps) {
            std::vector<int> idx;
            for (const auto& p : parents) idx.push_back(templ.require_index(p));
            templ.set_parents(templ.require_index(child), idx);
          }
          if (!is_order_legal(templ, cfg.issue_order)) {
            fail(ErrorCode::invalid_argument, "invalid_definition", "issue_order decides a child issue before its parent");
          }
        }
        out["issues"] = issues;
        out["issue_order"] = cfg.issue_order;
        out["tie_break"] = cfg.tie_break;
        out["dependencies"] = deps;
      } else if (kind == PollKind::allocation) {
        AllocationInstance inst = allocation_instance_from_json(d);
        inst.prefs.clear();
        inst.validate_structure();
        out["types"] = inst.types;
        out["items"] = inst.items;
        out["agents"] = inst.agents;
      } else {
        const auto session = detail::get_field<std::string>(d, "session");
        require_session(session);
        out["session"] = session;
      }
      return out;
    } catch (const Error& e) {
      if (e.reason() == "invalid_definition") throw;
      fail(e.code(), "invalid_definition", e.what());
    }
  }

  static Poll poll_from_definition(const json& d) {
    Poll p;
    p.id = d.at("id").get<std::string>();
    p.title = d.at("title").get<std::string>();
    p.created_by = d.at("created_by").get<std::string>();
    p.kind = parse_kind(d.at("kind").get<std::string>());
    p.ui_mode = parse_ui_mode(d.at("ui_mode").get<std::string>());
    p.definition = d;
    switch (p.kind) {
      case PollKind::single:
        for (const auto& a : d.at("alternatives")) p.alternatives.push_back({a.at("id"), a.at("label")});
        for (const auto& r : d.at("rules")) p.rules.push_back(Rule::parse(r.get<std::string>()));
        for (const auto& r : d.at("mov_rules")) p.mov_rules.push_back(Rule::parse(r.get<std::string>()));
        p.mixture_k = d.at("mixture_k").get<int>();
        break;
      case PollKind::multi_issue:
        for (const auto& i : d.at("issues")) p.multipoll.issues.push_back(issue_from_json(i));
        p.multipoll.issue_order = d.at("issue_order").get<std::vector<std::string>>();
        p.multipoll.tie_break = d.at("tie_break").get<std::map<std::string, std::string>>();
        p.dependencies = d.at("dependencies").get<std::map<std::string, std::vector<std::string>>>();
        break;
      case PollKind::allocation:
        p.allocation = allocation_instance_from_json(d);
        break;
      case PollKind::matching:
        p.session = d.at("session").get<std::string>();
        break;
    }
    return p;
  }

  // -- ballots ---------------------------------------------------------------

  /// Validates a payload against the poll; returns the stored payload and,
  /// for single polls, the derived weak order.
  std::pair<json, std::optional<WeakOrder>> validate_payload(const PollState& state, const std::string& voter,
                                                             const json& payload) const {
    if (!payload.is_object()) fail(ErrorCode::syntax, "invalid_payload", "ballot payload must be an object");
    try {
      const auto& poll = state.poll;
      switch (poll.kind) {
        case PollKind::single: return validate_single(poll, payload);
        case PollKind::multi_issue: {
          if (payload.contains("cpnet")) {
            const auto text = detail::get_field<std::string>(payload, "cpnet");
            const auto net = parse_cpnet(text);
            check_cpnet_voter(poll.multipoll, net);
            return {json{{"cpnet", format_cpnet(net)}}, std::nullopt};
          }
          const auto issue_id = detail::get_field<std::string>(payload, "issue");
          const auto value = detail::get_field<std::string>(payload, "value");
          const auto& issue = poll.multipoll.issue(issue_id);
          issue.value_index(value);
          const auto& current = poll.multipoll.issue_order.at(state.decisions.size());
          if (issue_id != current) {
            fail(ErrorCode::conflict, "invalid_payload",
                 "issue '" + issue_id + "' is not open for voting (current issue is '" + current + "')");
          }
          return {json{{"issue", issue_id}, {"value", value}}, std::nullopt};
        }
        case PollKind::allocation: {
          const auto prefs = agent_preferences_from_json(detail::get_field<json>(payload, "prefs"));
          poll.allocation.validate_preference(voter, prefs);
          json stored = json::object();
          for (const auto& [type, tp] : prefs) stored[type] = to_json_value(tp);
          return {json{{"prefs", stored}}, std::nullopt};
        }
        case PollKind::matching: {
          const auto app = detail::get_field<json>(payload, "application");
          StudentApplication sa{voter, detail::get_field<std::vector<double>>(app, "features"),
                                detail::get_field_or<std::vector<std::string>>(app, "course_ranking", {})};
          return {json{{"application", {{"features", sa.features}, {"course_ranking", sa.course_ranking}}}}, std::nullopt};
        }
      }
    } catch (const Error& e) {
      if (e.reason() == "invalid_payload") throw;
      fail(e.code() == ErrorCode::syntax ? ErrorCode::syntax : ErrorCode::invalid_argument, "invalid_payload", e.what());
    }
    fail(ErrorCode::invalid_argument, "invalid_payload", "unsupported poll kind");
  }

  static std::pair<json, std::optional<WeakOrder>> validate_single(const Poll& poll, const json& payload) {
    PreferenceProfile universe(poll.alternatives);
    const auto ids = universe.ids();
    auto check_known = [&](const std::string& id) {
      if (!universe.index_of(id)) fail(ErrorCode::invalid_argument, "invalid_payload", "unknown alternative '" + id + "'");
    };
    switch (poll.ui_mode) {
      case UiMode::one_column:
      case UiMode::two_column: {
        const auto order = weak_order_from_json(detail::get_field<json>(payload, "order"));
        for (const auto& g : order.groups())
          for (const auto& id : g) check_known(id);
        return {json{{"order", to_json_value(order)}}, order};
      }
      case UiMode::sliders:
      case UiMode::stars: {
        const double hi = poll.ui_mode == UiMode::sliders ? 100.0 : 10.0;
        const auto values = detail::get_field<std::map<std::string, double>>(payload, "values");
        std::map<double, WeakOrder::Group, std::greater<>> by_value;
        for (const auto& [id, v] : values) {
          check_known(id);
          if (!(v >= 0.0 && v <= hi)) {
            fail(ErrorCode::invalid_argument, "invalid_payload",
                 "value for '" + id + "' must be within 0.." + std::to_string(static_cast<int>(hi)));
          }
        }
        for (const auto& id : ids) {
          auto it = values.find(id);
          if (it != values.end()) by_value[it->second].push_back(id);
        }
        std::vector<WeakOrder::Group> groups;
        for (auto& [_, g] : by_value) groups.push_back(std::move(g));
        WeakOrder order(std::move(groups));
        return {json{{"values", values}}, order};
      }
      case UiMode::yes_no: {
        const auto approved = detail::get_field<std::vector<std::string>>(payload, "approved");
        std::set<std::string> yes;
        for (const auto& id : approved) {
          check_known(id);
          if (!yes.insert(id).second) fail(ErrorCode::invalid_argument, "invalid_payload", "'" + id + "' approved twice");
        }
        WeakOrder::Group top;
        WeakOrder::Group rest;
        for (const auto& id : ids) (yes.count(id) ? top : rest).push_back(id);
        std::vector<WeakOrder::Group> groups;
        if (top.empty() || rest.empty()) {
          groups.push_back(ids);
        } else {
          groups.push_back(std::move(top));
          groups.push_back(std::move(rest));
        }
        std::vector<std::string> stored;
        for (const auto& id : ids) {
          if (yes.count(id)) stored.push_back(id);
        }
        return {json{{"approved", stored}}, WeakOrder(std::move(groups))};
      }
    }
    fail(ErrorCode::invalid_argument, "invalid_payload", "unsupported ui mode");
  }

  /// Students of a matching poll submit their application as a ballot; the
  /// referenced session's instance picks it up.
  void apply_application(const PollState& state, const std::string& voter, const json& stored) {
    auto& session = matchings_.at(state.poll.session);
    if (session.instance.is_null()) {
      fail(ErrorCode::conflict, "no_instance", "matching session '" + session.id + "' has no instance");
    }
    auto instance = matching_instance_from_json(session.instance);
    const auto& app = stored.at("application");
    StudentApplication sa{voter, app.at("features").get<std::vector<double>>(),
                          app.at("course_ranking").get<std::vector<std::string>>()};
    bool replaced = false;
    for (auto& s : instance.students) {
      if (s.student == voter) {
        s = sa;
        replaced = true;
      }
    }
    if (!replaced) instance.students.push_back(sa);
    commit({{"type", "matching_instance"}, {"session", session.id}, {"instance", to_json_value(instance)}});
  }

  static PreferenceProfile freeze_profile(const PollState& state) {
    PreferenceProfile profile(state.poll.alternatives);
    const auto ids = profile.ids();
    for (const auto& voter : state.voter_order) {
      const auto& r = state.revisions.at(voter).back();
      profile.add_ballot(Ballot{voter, complete_with_unranked(*r.order, ids), 1, r.submitted_at});
    }
    return profile;
  }

  static std::map<std::string, std::string> decided_assignment(const PollState& state) {
    std::map<std::string, std::string> decided;
    for (const auto& d : state.decisions) decided[d.tally.issue] = d.tally.outcome;
    return decided;
  }

  // -- results -----------------------------------------------------------------

  json compute_body(const PollState& state, std::uint64_t seed) const {
    const auto& poll = state.poll;
    json body{{"poll_id", poll.id}, {"seed", seed}};
    if (poll.kind == PollKind::single) {
      const auto profile = freeze_profile(state);
      if (profile.ballots().empty()) fail(ErrorCode::conflict, "no_ballots", "poll '" + poll.id + "' has no ballots");
      body["profile_digest"] = sha256_hex(serialize_profile(profile));
      body["voters"] = profile.voter_count();
      json table = json::array();
      for (const auto& r : results_table(profile, poll.rules)) table.push_back(to_json_value(r));
      body["results_table"] = table;
      json movs = json::array();
      for (const auto& rule : poll.mov_rules) movs.push_back(to_json_value(margin_of_victory(profile, rule, options_.mov)));
      body["mov"] = movs;
      if (poll.mixture_k > 0 && profile.voter_count() >= poll.mixture_k) {
        MixtureOptions mo;
        mo.k = poll.mixture_k;
        mo.seed = seed;
        mo.restarts = options_.mixture_restarts;
        mo.tol = options_.mixture_tol;
        mo.max_iters = options_.mixture_max_iters;
        body["mixture"] = to_json_value(fit_pl_mixture(linearize(profile, seed), mo));
      } else {
        body["mixture"] = nullptr;
        body["mixture_note"] = "fewer ballots than mixture components";
      }
    } else if (poll.kind == PollKind::allocation) {
      AllocationInstance inst = poll.allocation;
      for (const auto& voter : state.voter_order) {
        inst.prefs[voter] = agent_preferences_from_json(state.revisions.at(voter).back().payload.at("prefs"));
      }
      for (const auto& agent : inst.agents) {
        if (!inst.prefs.count(agent)) {
          fail(ErrorCode::conflict, "missing_preferences", "agent '" + agent + "' has not submitted preferences");
        }
      }
      body["profile_digest"] = sha256_hex(to_json_value(inst).dump());
      body["allocation"] = to_json_value(serial_dictatorship(inst));
    } else if (poll.kind == PollKind::multi_issue) {
      fail(ErrorCode::conflict, "wrong_kind", "multi-issue polls are decided issue by issue via advance");
    } else {
      fail(ErrorCode::conflict, "wrong_kind", "matching polls are computed through their matching session");
    }
    return body;
  }

  // -- views -----------------------------------------------------------------

  json poll_json(const PollState& state) const {
    json out = state.poll.definition;
    out["status"] = state.poll.status == PollStatus::open ? "open" : "closed";
    out["ballots"] = state.voter_order.size();
    if (state.poll.kind == PollKind::multi_issue) {
      const auto& order = state.poll.multipoll.issue_order;
      out["current_issue"] = state.decisions.size() < order.size() && state.poll.status == PollStatus::open
                                 ? json(order[state.decisions.size()])
                                 : json(nullptr);
      out["decided"] = decided_assignment(state);
    }
    return out;
  }

  static json ballot_json(const BallotRecord& r) {
    json out{{"poll", r.poll}, {"voter", r.voter}, {"revision", r.revision}, {"submitted_at", r.submitted_at}, {"payload", r.payload}};
    if (r.order) out["order"] = to_json_value(*r.order);
    return out;
  }

  static json snapshot_json(const StoredSnapshot& s, bool cached) {
    return {{"snapshot_id", s.id}, {"computed_at", s.computed_at}, {"digest", s.digest}, {"cached", cached}, {"snapshot", s.body}};
  }

  json decision_json(const PollState& state, std::size_t index) const {
    const auto& d = state.decisions.at(index);
    const auto& order = state.poll.multipoll.issue_order;
    json out{{"issue", d.tally.issue}, {"tally", to_json_value(d.tally)}, {"forced", d.forced}, {"missing_voters", d.missing}};
    out["next_issue"] = index + 1 < order.size() ? json(order[index + 1]) : json(nullptr);
    return out;
  }

  static json session_json(const MatchingSession& s) {
    return {{"id", s.id}, {"title", s.title}, {"instance", s.instance}, {"runs", s.runs.size()}};
  }

  static json run_json(const MatchingRun& r) { return {{"run", r.run}, {"computed_at", r.seq}, {"outcome", r.outcome}}; }

  ServiceOptions options_;
  EventLog log_;
  mutable std::mutex mu_;
  std::int64_t seq_ = 0;
  std::int64_t next_poll_ = 1;
  std::int64_t next_matching_ = 1;
  std::map<std::string, PollState> polls_;
  std::map<std::string, MatchingSession> matchings_;
};

}  // namespace opra::service
