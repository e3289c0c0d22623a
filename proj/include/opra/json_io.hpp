#pragma once

// JSON encodings of the domain types. Exact rationals travel as strings
// ("3/2"); everything else maps onto plain JSON values.

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

#include "opra/cpnet.hpp"
#include "opra/error.hpp"
#include "opra/matching.hpp"
#include "opra/mixture.hpp"
#include "opra/mov.hpp"
#include "opra/preference.hpp"
#include "opra/rules.hpp"
#include "opra/sequential.hpp"
#include "opra/serial_dictatorship.hpp"

namespace opra {

using json = nlohmann::json;

namespace detail {

template <typename T>
T get_field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) fail(ErrorCode::syntax, std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::syntax, std::string("field '") + key + "': " + e.what());
  }
}

template <typename T>
T get_field_or(const json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
  return get_field<T>(j, key);
}

}  // namespace detail

// -- preference core ---------------------------------------------------------

inline json to_json_value(const WeakOrder& order) { return order.groups(); }

inline WeakOrder weak_order_from_json(const json& j) {
  if (!j.is_array()) fail(ErrorCode::syntax, "weak order must be an array of groups");
  std::vector<WeakOrder::Group> groups;
  for (const auto& g : j) {
    if (g.is_string()) {
      groups.push_back({g.get<std::string>()});
    } else if (g.is_array()) {
      WeakOrder::Group group;
      for (const auto& id : g) {
        if (!id.is_string()) fail(ErrorCode::syntax, "weak order ids must be strings");
        group.push_back(id.get<std::string>());
      }
      groups.push_back(std::move(group));
    } else {
      fail(ErrorCode::syntax, "weak order groups must be arrays of ids");
    }
  }
  return WeakOrder(std::move(groups));
}

inline json to_json_value(const RuleResult& r) {
  json j{{"rule", r.rule}, {"winners", r.winners}};
  if (r.scores) {
    json scores = json::object();
    for (const auto& [id, s] : *r.scores) scores[id] = s.str();
    j["scores"] = std::move(scores);
  }
  if (r.universes_explored) j["universes_explored"] = *r.universes_explored;
  return j;
}

inline json to_json_value(const MovReport& r) {
  json j{{"rule", r.rule}, {"mov", r.mov}, {"method", std::string(to_string(r.method))}};
  if (r.bounds) j["bounds"] = {{"lower", r.bounds->lower}, {"upper", r.bounds->upper}};
  return j;
}

inline json to_json_value(const PLParameters& p) {
  json gamma = json::object();
  for (std::size_t i = 0; i < p.ids.size(); ++i) gamma[p.ids[i]] = p.gamma[i];
  return gamma;
}

inline json to_json_value(const ClusterReport& c) {
  json top = json::array();
  for (const auto& [id, g] : c.top) top.push_back({{"id", id}, {"gamma", g}});
  return {{"component", c.component}, {"size", c.size}, {"weight", c.weight}, {"top", std::move(top)}};
}

/// Mixture report without the per-ballot responsibilities.
inline json to_json_value(const PLMixture& m) {
  json comps = json::array();
  for (const auto& c : m.components) comps.push_back(to_json_value(c));
  json clusters = json::array();
  for (const auto& c : cluster_summary(m)) clusters.push_back(to_json_value(c));
  return {{"estimator", m.estimator}, {"k", m.k},           {"seed", m.seed},
          {"weights", m.weights},     {"components", comps}, {"loglik", m.loglik},
          {"iterations", m.iterations}, {"converged", m.converged}, {"clusters", std::move(clusters)}};
}

// -- combinatorial -----------------------------------------------------------

inline json to_json_value(const Issue& issue) { return {{"id", issue.id}, {"values", issue.values}}; }

inline Issue issue_from_json(const json& j) {
  Issue issue;
  if (j.is_string()) {
    issue.id = j.get<std::string>();
  } else {
    issue.id = detail::get_field<std::string>(j, "id");
    if (j.contains("values")) {
      const auto values = detail::get_field<std::vector<std::string>>(j, "values");
      if (values.size() != 2) fail(ErrorCode::invalid_argument, "issue '" + issue.id + "' needs exactly two values");
      issue.values = {values[0], values[1]};
    }
  }
  return issue;
}

inline json to_json_value(const IssueTally& t) {
  return {{"issue", t.issue}, {"counts", t.counts}, {"outcome", t.outcome}, {"tie_broken", t.tie_broken}};
}

inline IssueTally issue_tally_from_json(const json& j) {
  IssueTally t;
  t.issue = detail::get_field<std::string>(j, "issue");
  t.counts = detail::get_field<std::array<std::int64_t, 2>>(j, "counts");
  t.outcome = detail::get_field<std::string>(j, "outcome");
  t.tie_broken = detail::get_field<bool>(j, "tie_broken");
  return t;
}

inline json to_json_value(const SequentialOutcome& o) {
  json tallies = json::array();
  for (const auto& t : o.tallies) tallies.push_back(to_json_value(t));
  return {{"assignment", o.assignment}, {"tallies", std::move(tallies)}};
}

inline json to_json_value(const TypePreference& tp) {
  json rows = json::array();
  for (const auto& r : tp.rows) rows.push_back({{"when", r.when}, {"ranking", r.ranking}});
  return {{"parents", tp.parents}, {"rows", std::move(rows)}};
}

/// Accepts {"ranking": [...]} as shorthand for an unconditional preference.
inline TypePreference type_preference_from_json(const json& j) {
  TypePreference tp;
  if (j.contains("ranking")) {
    tp.rows.push_back({{}, detail::get_field<std::vector<std::string>>(j, "ranking")});
    return tp;
  }
  tp.parents = detail::get_field_or<std::vector<std::string>>(j, "parents", {});
  for (const auto& r : detail::get_field<json>(j, "rows")) {
    tp.rows.push_back({detail::get_field_or<std::map<std::string, std::string>>(r, "when", {}),
                       detail::get_field<std::vector<std::string>>(r, "ranking")});
  }
  return tp;
}

inline std::map<std::string, TypePreference> agent_preferences_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::syntax, "preferences must map item types to rankings");
  std::map<std::string, TypePreference> out;
  for (const auto& [type, tp] : j.items()) out[type] = type_preference_from_json(tp);
  return out;
}

inline json to_json_value(const AllocationInstance& inst) {
  json prefs = json::object();
  for (const auto& [agent, per_type] : inst.prefs) {
    json a = json::object();
    for (const auto& [type, tp] : per_type) a[type] = to_json_value(tp);
    prefs[agent] = std::move(a);
  }
  return {{"types", inst.types}, {"items", inst.items}, {"agents", inst.agents}, {"prefs", std::move(prefs)}};
}

inline AllocationInstance allocation_instance_from_json(const json& j) {
  AllocationInstance inst;
  inst.types = detail::get_field<std::vector<std::string>>(j, "types");
  inst.items = detail::get_field<std::map<std::string, std::vector<std::string>>>(j, "items");
  inst.agents = detail::get_field<std::vector<std::string>>(j, "agents");
  if (j.contains("prefs")) {
    for (const auto& [agent, p] : j.at("prefs").items()) inst.prefs[agent] = agent_preferences_from_json(p);
  }
  return inst;
}

inline json to_json_value(const AllocationOutcome& o) {
  json bundles = json::array();
  for (const auto& [agent, bundle] : o.bundles) bundles.push_back({{"agent", agent}, {"bundle", bundle}});
  return {{"bundles", std::move(bundles)}};
}

// -- matching ----------------------------------------------------------------

inline json to_json_value(const MatchingInstance& inst) {
  json features = json::array();
  for (const auto& f : inst.schema.features) features.push_back({{"name", f.name}, {"min", f.min}, {"max", f.max}});
  json courses = json::array();
  for (const auto& c : inst.courses) {
    courses.push_back({{"course", c.course}, {"weights", c.weights}, {"capacity", c.capacity}, {"pinned", c.pinned}});
  }
  json students = json::array();
  for (const auto& s : inst.students) {
    students.push_back({{"student", s.student}, {"features", s.features}, {"course_ranking", s.course_ranking}});
  }
  return {{"schema", {{"features", std::move(features)}}}, {"courses", std::move(courses)}, {"students", std::move(students)}};
}

inline MatchingInstance matching_instance_from_json(const json& j) {
  MatchingInstance inst;
  const auto schema = detail::get_field<json>(j, "schema");
  for (const auto& f : detail::get_field<json>(schema, "features")) {
    inst.schema.features.push_back({detail::get_field<std::string>(f, "name"), detail::get_field<double>(f, "min"),
                                    detail::get_field<double>(f, "max")});
  }
  for (const auto& c : detail::get_field<json>(j, "courses")) {
    inst.courses.push_back({detail::get_field<std::string>(c, "course"), detail::get_field<std::vector<double>>(c, "weights"),
                            detail::get_field<int>(c, "capacity"),
                            detail::get_field_or<std::vector<std::string>>(c, "pinned", {})});
  }
  for (const auto& s : detail::get_field<json>(j, "students")) {
    inst.students.push_back({detail::get_field<std::string>(s, "student"),
                             detail::get_field<std::vector<double>>(s, "features"),
                             detail::get_field_or<std::vector<std::string>>(s, "course_ranking", {})});
  }
  return inst;
}

inline json to_json_value(const CourseExplanation& ce) {
  json j{{"course", ce.course},
         {"reason", std::string(to_string(ce.reason))},
         {"student_score", ce.student_score},
         {"capacity", ce.capacity},
         {"message", ce.message}};
  if (ce.rank) j["rank"] = *ce.rank;
  if (ce.reason == Reason::assigned_here) j["pinned"] = ce.pinned;
  if (ce.assigned_course) j["assigned_course"] = *ce.assigned_course;
  if (ce.assigned_rank) j["assigned_rank"] = *ce.assigned_rank;
  if (ce.cutoff) j["cutoff"] = {{"score", ce.cutoff->score}, {"student", ce.cutoff->student}};
  return j;
}

inline CourseExplanation course_explanation_from_json(const json& j) {
  static const std::map<std::string, Reason> reasons{{"ASSIGNED_HERE", Reason::assigned_here},
                                                     {"ASSIGNED_HIGHER_RANKED", Reason::assigned_higher_ranked},
                                                     {"CAPACITY_FILLED", Reason::capacity_filled},
                                                     {"PINNED_ELSEWHERE", Reason::pinned_elsewhere},
                                                     {"NOT_RANKED", Reason::not_ranked}};
  CourseExplanation ce;
  ce.course = detail::get_field<std::string>(j, "course");
  const auto reason = detail::get_field<std::string>(j, "reason");
  auto it = reasons.find(reason);
  if (it == reasons.end()) fail(ErrorCode::syntax, "unknown reason '" + reason + "'");
  ce.reason = it->second;
  ce.student_score = detail::get_field<double>(j, "student_score");
  ce.capacity = detail::get_field<int>(j, "capacity");
  ce.message = detail::get_field<std::string>(j, "message");
  if (j.contains("rank")) ce.rank = j.at("rank").get<int>();
  ce.pinned = detail::get_field_or<bool>(j, "pinned", false);
  if (j.contains("assigned_course")) ce.assigned_course = j.at("assigned_course").get<std::string>();
  if (j.contains("assigned_rank")) ce.assigned_rank = j.at("assigned_rank").get<int>();
  if (j.contains("cutoff")) {
    ce.cutoff = Cutoff{j.at("cutoff").at("score").get<double>(), j.at("cutoff").at("student").get<std::string>()};
  }
  return ce;
}

inline json to_json_value(const Explanation& ex) {
  json courses = json::array();
  for (const auto& c : ex.courses) courses.push_back(to_json_value(c));
  return {{"student", ex.student},
          {"assigned", ex.assigned ? json(*ex.assigned) : json(nullptr)},
          {"courses", std::move(courses)}};
}

inline Explanation explanation_from_json(const json& j) {
  Explanation ex;
  ex.student = detail::get_field<std::string>(j, "student");
  if (j.contains("assigned") && !j.at("assigned").is_null()) ex.assigned = j.at("assigned").get<std::string>();
  for (const auto& c : detail::get_field<json>(j, "courses")) ex.courses.push_back(course_explanation_from_json(c));
  return ex;
}

inline json to_json_value(const MatchingOutcome& o) {
  json assignment = json::object();
  for (const auto& [s, c] : o.assignment) assignment[s] = c ? json(*c) : json(nullptr);
  json cutoffs = json::object();
  for (const auto& [c, cut] : o.cutoffs) cutoffs[c] = {{"score", cut.score}, {"student", cut.student}};
  json explanations = json::object();
  for (const auto& [s, ex] : o.provenance) explanations[s] = to_json_value(ex);
  return {{"assignment", std::move(assignment)},
          {"rosters", o.rosters},
          {"cutoffs", std::move(cutoffs)},
          {"explanations", std::move(explanations)}};
}

inline MatchingOutcome matching_outcome_from_json(const json& j) {
  MatchingOutcome o;
  const auto assignment = detail::get_field<json>(j, "assignment");
  for (const auto& [s, c] : assignment.items()) {
    o.assignment[s] = c.is_null() ? std::nullopt : std::optional<std::string>(c.get<std::string>());
  }
  o.rosters = detail::get_field<std::map<std::string, std::vector<std::string>>>(j, "rosters");
  const auto cutoffs = detail::get_field<json>(j, "cutoffs");
  for (const auto& [c, cut] : cutoffs.items()) {
    o.cutoffs[c] = Cutoff{cut.at("score").get<double>(), cut.at("student").get<std::string>()};
  }
  const auto explanations = detail::get_field<json>(j, "explanations");
  for (const auto& [s, ex] : explanations.items()) o.provenance[s] = explanation_from_json(ex);
  return o;
}

}  // namespace opra
