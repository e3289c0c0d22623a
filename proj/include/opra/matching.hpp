#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "opra/error.hpp"

namespace opra {

struct Feature {
  std::string name;
  double min = 0.0;
  double max = 1.0;

  friend bool operator==(const Feature&, const Feature&) = default;
};

struct FeatureSchema {
  std::vector<Feature> features;

  std::size_t size() const { return features.size(); }

  void validate() const {
    std::set<std::string> names;
    for (const auto& f : features) {
      if (f.name.empty()) fail(ErrorCode::invalid_argument, "feature name must be non-empty");
      if (!names.insert(f.name).second) fail(ErrorCode::invalid_argument, "duplicate feature '" + f.name + "'");
      if (!(f.min < f.max)) fail(ErrorCode::invalid_argument, "feature '" + f.name + "' needs min < max");
    }
  }

  friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;
};

struct StudentApplication {
  std::string student;
  std::vector<double> features;             // aligned with the schema
  std::vector<std::string> course_ranking;  // most wanted first; unlisted courses are unacceptable

  /// 1-based position of `course` in the ranking, or nullopt.
  std::optional<int> rank_of(const std::string& course) const {
    auto it = std::find(course_ranking.begin(), course_ranking.end(), course);
    if (it == course_ranking.end()) return std::nullopt;
    return static_cast<int>(it - course_ranking.begin()) + 1;
  }

  friend bool operator==(const StudentApplication&, const StudentApplication&) = default;
};

struct CourseSpec {
  std::string course;
  std::vector<double> weights;  // aligned with the schema
  int capacity = 0;
  std::vector<std::string> pinned;

  friend bool operator==(const CourseSpec&, const CourseSpec&) = default;
};

struct MatchingInstance {
  FeatureSchema schema;
  std::vector<CourseSpec> courses;
  std::vector<StudentApplication> students;

  friend bool operator==(const MatchingInstance&, const MatchingInstance&) = default;

  const CourseSpec* find_course(const std::string& id) const {
    for (const auto& c : courses) {
      if (c.course == id) return &c;
    }
    return nullptr;
  }
  const StudentApplication* find_student(const std::string& id) const {
    for (const auto& s : students) {
      if (s.student == id) return &s;
    }
    return nullptr;
  }

  /// Course a student is pinned to, if any.
  const CourseSpec* pinned_course(const std::string& student) const {
    for (const auto& c : courses) {
      if (std::find(c.pinned.begin(), c.pinned.end(), student) != c.pinned.end()) return &c;
    }
    return nullptr;
  }

  void validate() const {
    schema.validate();
    std::set<std::string> course_ids;
    for (const auto& c : courses) {
      if (c.course.empty()) fail(ErrorCode::invalid_argument, "course id must be non-empty");
      if (!course_ids.insert(c.course).second) fail(ErrorCode::invalid_argument, "duplicate course '" + c.course + "'");
      if (c.weights.size() != schema.size()) {
        fail(ErrorCode::invalid_argument, "course '" + c.course + "' has " + std::to_string(c.weights.size()) +
                                              " weights for " + std::to_string(schema.size()) + " features");
      }
      if (c.capacity < 0) fail(ErrorCode::invalid_argument, "course '" + c.course + "' has negative capacity");
    }
    std::set<std::string> student_ids;
    for (const auto& s : students) {
      if (s.student.empty()) fail(ErrorCode::invalid_argument, "student token must be non-empty");
      if (!student_ids.insert(s.student).second) fail(ErrorCode::invalid_argument, "duplicate student '" + s.student + "'");
      if (s.features.size() != schema.size()) {
        fail(ErrorCode::invalid_argument, "student '" + s.student + "' has " + std::to_string(s.features.size()) +
                                              " features for a schema of " + std::to_string(schema.size()));
      }
      for (std::size_t f = 0; f < schema.size(); ++f) {
        const auto& spec = schema.features[f];
        if (!(s.features[f] >= spec.min && s.features[f] <= spec.max)) {
          fail(ErrorCode::invalid_argument, "student '" + s.student + "' feature '" + spec.name + "' is outside [" +
                                                std::to_string(spec.min) + ", " + std::to_string(spec.max) + "]");
        }
      }
      std::set<std::string> ranked;
      for (const auto& c : s.course_ranking) {
        if (!course_ids.count(c)) fail(ErrorCode::invalid_argument, "student '" + s.student + "' ranks unknown course '" + c + "'");
        if (!ranked.insert(c).second) fail(ErrorCode::invalid_argument, "student '" + s.student + "' ranks '" + c + "' twice");
      }
    }
    std::set<std::string> pinned_once;
    for (const auto& c : courses) {
      for (const auto& p : c.pinned) {
        if (!student_ids.count(p)) fail(ErrorCode::not_found, "pin of unknown student '" + p + "' to '" + c.course + "'");
        if (!pinned_once.insert(p).second) fail(ErrorCode::invalid_argument, "student '" + p + "' is pinned more than once");
      }
      if (static_cast<int>(c.pinned.size()) > c.capacity) {
        std::string names;
        for (const auto& p : c.pinned) names += (names.empty() ? "" : ",") + p;
        fail(ErrorCode::invalid_argument, "course '" + c.course + "' has " + std::to_string(c.pinned.size()) +
                                              " pins (" + names + ") but capacity " + std::to_string(c.capacity));
      }
    }
  }
};

inline double student_score(std::span<const double> weights, std::span<const double> features) {
  if (weights.size() != features.size()) {
    fail(ErrorCode::invalid_argument, "weight vector has length " + std::to_string(weights.size()) +
                                          " but feature vector has " + std::to_string(features.size()));
  }
  double score = 0.0;
  for (std::size_t f = 0; f < weights.size(); ++f) score += weights[f] * features[f];
  return score;
}

/// Students by descending score for this course; equal scores by ascending
/// token.
inline std::vector<std::string> course_preference_list(const CourseSpec& course,
                                                       const std::vector<StudentApplication>& students) {
  std::vector<std::pair<double, std::string>> scored;
  scored.reserve(students.size());
  for (const auto& s : students) scored.emplace_back(student_score(course.weights, s.features), s.student);
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<std::string> out;
  out.reserve(scored.size());
  for (auto& [_, id] : scored) out.push_back(std::move(id));
  return out;
}

enum class Reason { assigned_here, assigned_higher_ranked, capacity_filled, pinned_elsewhere, not_ranked };

inline std::string_view to_string(Reason r) {
  switch (r) {
    case Reason::assigned_here: return "ASSIGNED_HERE";
    case Reason::assigned_higher_ranked: return "ASSIGNED_HIGHER_RANKED";
    case Reason::capacity_filled: return "CAPACITY_FILLED";
    case Reason::pinned_elsewhere: return "PINNED_ELSEWHERE";
    case Reason::not_ranked: return "NOT_RANKED";
  }
  return "UNKNOWN";
}

struct Cutoff {
  double score = 0.0;
  std::string student;  // lowest-ranked admitted (non-pinned) student

  friend bool operator==(const Cutoff&, const Cutoff&) = default;
};

struct CourseExplanation {
  std::string course;
  Reason reason = Reason::not_ranked;
  std::optional<int> rank;  // the student's rank of this course
  double student_score = 0.0;
  bool pinned = false;                       // ASSIGNED_HERE via a pin
  std::optional<std::string> assigned_course;  // ASSIGNED_HIGHER_RANKED / PINNED_ELSEWHERE
  std::optional<int> assigned_rank;
  std::optional<Cutoff> cutoff;  // CAPACITY_FILLED, absent when every seat is pinned
  int capacity = 0;
  std::string message;

  friend bool operator==(const CourseExplanation&, const CourseExplanation&) = default;
};

struct Explanation {
  std::string student;
  std::optional<std::string> assigned;
  std::vector<CourseExplanation> courses;

  friend bool operator==(const Explanation&, const Explanation&) = default;
};

struct MatchingOutcome {
  std::map<std::string, std::optional<std::string>> assignment;  // student -> course
  std::map<std::string, std::vector<std::string>> rosters;       // pinned first, then by course preference
  std::map<std::string, Cutoff> cutoffs;                         // full courses with a non-pinned admit
  std::map<std::string, Explanation> provenance;

  friend bool operator==(const MatchingOutcome&, const MatchingOutcome&) = default;
};

namespace detail {

inline std::string format_score(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace detail

/// Reasons for every course the student ranked, in rank order, followed by
/// NOT_RANKED entries for each course in `also_query` the student did not
/// rank.
inline Explanation explain(const std::string& student, const MatchingOutcome& outcome, const MatchingInstance& instance,
                           const std::vector<std::string>& also_query = {}) {
  const auto* app = instance.find_student(student);
  if (!app) fail(ErrorCode::not_found, "unknown student '" + student + "'");
  auto assigned_it = outcome.assignment.find(student);
  if (assigned_it == outcome.assignment.end()) fail(ErrorCode::not_found, "student '" + student + "' is not in the outcome");

  Explanation ex;
  ex.student = student;
  ex.assigned = assigned_it->second;
  const auto* pin = instance.pinned_course(student);
  const std::optional<int> assigned_rank = ex.assigned ? app->rank_of(*ex.assigned) : std::nullopt;

  for (const auto& course_id : app->course_ranking) {
    const auto* course = instance.find_course(course_id);
    CourseExplanation ce;
    ce.course = course_id;
    ce.rank = app->rank_of(course_id);
    ce.student_score = student_score(course->weights, app->features);
    ce.capacity = course->capacity;

    if (ex.assigned && *ex.assigned == course_id) {
      ce.reason = Reason::assigned_here;
      ce.pinned = pin && pin->course == course_id;
      ce.message = ce.pinned ? "pinned to " + course_id + " by an administrator"
                             : "assigned to " + course_id + " (their choice #" + std::to_string(*ce.rank) + ")";
    } else if (pin) {
      ce.reason = Reason::pinned_elsewhere;
      ce.assigned_course = pin->course;
      ce.assigned_rank = app->rank_of(pin->course);
      ce.message = "not assigned to " + course_id + " because an administrator pinned them to " + pin->course;
    } else if (ex.assigned && assigned_rank && *assigned_rank < *ce.rank) {
      ce.reason = Reason::assigned_higher_ranked;
      ce.assigned_course = ex.assigned;
      ce.assigned_rank = assigned_rank;
      ce.message = "not assigned to " + course_id + " because they were assigned to a higher-ranked course, " +
                   *ex.assigned + " (their choice #" + std::to_string(*assigned_rank) + ")";
    } else {
      ce.reason = Reason::capacity_filled;
      auto cut = outcome.cutoffs.find(course_id);
      if (cut != outcome.cutoffs.end()) {
        ce.cutoff = cut->second;
        ce.message = course_id + " filled its " + std::to_string(course->capacity) +
                     " seats with students it ranks higher (cutoff score " + detail::format_score(cut->second.score) +
                     " vs " + detail::format_score(ce.student_score) + ")";
      } else {
        ce.message = course_id + " has no open seats (" + std::to_string(course->capacity) +
                     " seats, all taken by pinned students)";
      }
    }
    ex.courses.push_back(std::move(ce));
  }

  for (const auto& course_id : also_query) {
    if (app->rank_of(course_id)) continue;
    const auto* course = instance.find_course(course_id);
    if (!course) fail(ErrorCode::not_found, "unknown course '" + course_id + "'");
    CourseExplanation ce;
    ce.course = course_id;
    ce.reason = (ex.assigned && *ex.assigned == course_id) ? Reason::assigned_here : Reason::not_ranked;
    ce.pinned = ce.reason == Reason::assigned_here;
    ce.student_score = student_score(course->weights, app->features);
    ce.capacity = course->capacity;
    ce.message = ce.reason == Reason::assigned_here ? "pinned to " + course_id + " by an administrator"
                                                    : "did not rank " + course_id;
    ex.courses.push_back(std::move(ce));
  }
  return ex;
}

/// Pinned students are placed first and their seats deducted; the remaining
/// seats are filled by course-proposing deferred acceptance. The result is
/// the course-optimal stable matching of the non-pinned participants.
inline MatchingOutcome stable_match(const MatchingInstance& instance) {
  instance.validate();

  std::set<std::string> pinned;
  for (const auto& c : instance.courses) pinned.insert(c.pinned.begin(), c.pinned.end());

  std::vector<StudentApplication> free_students;
  for (const auto& s : instance.students) {
    if (!pinned.count(s.student)) free_students.push_back(s);
  }

  const std::size_t nc = instance.courses.size();
  std::vector<std::vector<std::string>> lists(nc);
  std::vector<std::size_t> next(nc, 0);
  std::vector<int> open(nc, 0);
  std::vector<std::set<std::string>> held(nc);
  std::map<std::string, std::size_t> holding;  // student -> course index

  for (std::size_t c = 0; c < nc; ++c) {
    lists[c] = course_preference_list(instance.courses[c], free_students);
    open[c] = instance.courses[c].capacity - static_cast<int>(instance.courses[c].pinned.size());
  }

  bool progress = true;
  while (progress) {
    progress = false;
    for (std::size_t c = 0; c < nc; ++c) {
      while (static_cast<int>(held[c].size()) < open[c] && next[c] < lists[c].size()) {
        progress = true;
        const auto& sid = lists[c][next[c]++];
        const auto* app = instance.find_student(sid);
        const auto rank = app->rank_of(instance.courses[c].course);
        if (!rank) continue;
        auto cur = holding.find(sid);
        if (cur == holding.end()) {
          holding[sid] = c;
          held[c].insert(sid);
        } else if (*rank < *app->rank_of(instance.courses[cur->second].course)) {
          held[cur->second].erase(sid);
          cur->second = c;
          held[c].insert(sid);
        }
      }
    }
  }

  MatchingOutcome out;
  for (const auto& s : instance.students) out.assignment[s.student] = std::nullopt;
  for (std::size_t c = 0; c < nc; ++c) {
    const auto& course = instance.courses[c];
    auto& roster = out.rosters[course.course];
    for (const auto& p : course.pinned) {
      roster.push_back(p);
      out.assignment[p] = course.course;
    }
    std::optional<std::string> last;
    for (const auto& sid : lists[c]) {
      if (held[c].count(sid)) {
        roster.push_back(sid);
        out.assignment[sid] = course.course;
        last = sid;
      }
    }
    if (last && static_cast<int>(roster.size()) >= course.capacity) {
      out.cutoffs[course.course] = Cutoff{student_score(course.weights, instance.find_student(*last)->features), *last};
    }
  }
  for (const auto& s : instance.students) out.provenance[s.student] = explain(s.student, out, instance);
  return out;
}

/// Administrator edits applied before a re-run.
struct SetWeights {
  std::string course;
  std::vector<double> weights;
};
struct SetCapacity {
  std::string course;
  int capacity = 0;
};
struct AddStudent {
  StudentApplication application;
};
struct RemoveStudent {
  std::string student;
};
struct PinStudent {
  std::string student;
  std::string course;
};
struct UnpinStudent {
  std::string student;
};

using MatchingEdit = std::variant<SetWeights, SetCapacity, AddStudent, RemoveStudent, PinStudent, UnpinStudent>;

inline MatchingInstance apply_edits(MatchingInstance instance, const std::vector<MatchingEdit>& edits) {
  auto course_of = [&](const std::string& id) -> CourseSpec& {
    for (auto& c : instance.courses) {
      if (c.course == id) return c;
    }
    fail(ErrorCode::not_found, "unknown course '" + id + "'");
  };
  auto unpin = [&](const std::string& student) {
    for (auto& c : instance.courses) std::erase(c.pinned, student);
  };
  for (const auto& edit : edits) {
    if (const auto* e = std::get_if<SetWeights>(&edit)) {
      course_of(e->course).weights = e->weights;
    } else if (const auto* e = std::get_if<SetCapacity>(&edit)) {
      course_of(e->course).capacity = e->capacity;
    } else if (const auto* e = std::get_if<AddStudent>(&edit)) {
      if (instance.find_student(e->application.student)) {
        fail(ErrorCode::conflict, "student '" + e->application.student + "' already exists");
      }
      instance.students.push_back(e->application);
    } else if (const auto* e = std::get_if<RemoveStudent>(&edit)) {
      if (!instance.find_student(e->student)) fail(ErrorCode::not_found, "unknown student '" + e->student + "'");
      std::erase_if(instance.students, [&](const StudentApplication& s) { return s.student == e->student; });
      unpin(e->student);
    } else if (const auto* e = std::get_if<PinStudent>(&edit)) {
      if (!instance.find_student(e->student)) fail(ErrorCode::not_found, "unknown student '" + e->student + "'");
      unpin(e->student);
      course_of(e->course).pinned.push_back(e->student);
    } else if (const auto* e = std::get_if<UnpinStudent>(&edit)) {
      unpin(e->student);
    }
  }
  return instance;
}

/// Full recomputation on the edited instance.
inline MatchingOutcome rematch(const MatchingInstance& instance, const std::vector<MatchingEdit>& edits = {}) {
  return stable_match(apply_edits(instance, edits));
}

}  // namespace opra
