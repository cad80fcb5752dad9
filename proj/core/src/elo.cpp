#include "limeeval/elo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "json.hpp"
#include "limeeval/error.hpp"

namespace limeeval {

using json = nlohmann::json;

std::string_view to_string(Attribute a) {
  switch (a) {
    case Attribute::kOverall: return "overall";
    case Attribute::kIllumination: return "illumination";
    case Attribute::kNoiseArtifacts: return "noise_artifacts";
    case Attribute::kBlurriness: return "blurriness";
    case Attribute::kColor: return "color";
  }
  return "unknown";
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::kABetter: return "a_better";
    case Outcome::kBBetter: return "b_better";
    case Outcome::kBothGood: return "both_good";
    case Outcome::kBothBad: return "both_bad";
  }
  return "unknown";
}

Attribute parse_attribute(std::string_view name) {
  for (auto a : kAllAttributes) {
    if (to_string(a) == name) return a;
  }
  throw ValidationError("unknown attribute '" + std::string(name) + "'");
}

Outcome parse_outcome(std::string_view name) {
  for (auto o : {Outcome::kABetter, Outcome::kBBetter, Outcome::kBothGood,
                 Outcome::kBothBad}) {
    if (to_string(o) == name) return o;
  }
  throw ValidationError("unknown outcome '" + std::string(name) +
                        "' (expected a_better, b_better, both_good, both_bad)");
}

void validate(const VoteRecord& v) {
  if (v.method_a.empty() || v.method_b.empty()) {
    throw ValidationError("vote " + v.vote_id + " names an empty method");
  }
  if (v.method_a == v.method_b) {
    throw ValidationError("vote " + v.vote_id + " compares '" + v.method_a +
                          "' with itself");
  }
}

double expected_score(double r_a, double r_b) {
  return 1.0 / (1.0 + std::pow(10.0, (r_b - r_a) / 400.0));
}

RatingTable::RatingTable(std::string baseline_method, EloParams params)
    : baseline_(std::move(baseline_method)), params_(params) {
  if (baseline_.empty()) throw ValidationError("baseline method name is empty");
}

double RatingTable::rating(Attribute attribute, const std::string& method) const {
  const auto it = ratings_.find({attribute, method});
  return it == ratings_.end() ? params_.initial_rating : it->second;
}

std::size_t RatingTable::vote_count(Attribute attribute, const std::string& method) const {
  const auto it = counts_.find({attribute, method});
  return it == counts_.end() ? 0 : it->second;
}

bool RatingTable::has(Attribute attribute, const std::string& method) const {
  return ratings_.count({attribute, method}) != 0;
}

double RatingTable::total_rating() const {
  double sum = 0.0;
  for (const auto& [k, r] : ratings_) sum += r;
  return sum;
}

double& RatingTable::slot(Attribute attribute, const std::string& method) {
  return ratings_.try_emplace({attribute, method}, params_.initial_rating).first->second;
}

void RatingTable::apply(const VoteRecord& v) {
  validate(v);
  const Attribute attr = v.attribute;
  double& ra = slot(attr, v.method_a);
  double& rb = slot(attr, v.method_b);
  ++counts_[{attr, v.method_a}];
  ++counts_[{attr, v.method_b}];

  switch (v.outcome) {
    case Outcome::kABetter:
    case Outcome::kBBetter: {
      const double score_a = v.outcome == Outcome::kABetter ? 1.0 : 0.0;
      const double delta = params_.k_decisive * (score_a - expected_score(ra, rb));
      ra += delta;
      rb -= delta;
      break;
    }
    case Outcome::kBothGood:
    case Outcome::kBothBad: {
      // Both competitors play the baseline; deltas come from one snapshot so
      // the two virtual matches commute.
      const double score = v.outcome == Outcome::kBothGood ? 1.0 : 0.0;
      double& rbase = slot(attr, baseline_);
      const double base = rbase;
      double delta_a = 0.0, delta_b = 0.0;
      if (v.method_a != baseline_) {
        delta_a = params_.k_both * (score - expected_score(ra, base));
      }
      if (v.method_b != baseline_) {
        delta_b = params_.k_both * (score - expected_score(rb, base));
      }
      ra += delta_a;
      rb += delta_b;
      rbase -= delta_a + delta_b;
      break;
    }
  }
  ++votes_applied_;
}

std::vector<LeaderboardEntry> RatingTable::leaderboard(Attribute attribute) const {
  std::vector<LeaderboardEntry> out;
  for (const auto& [key, r] : ratings_) {
    if (key.first != attribute) continue;
    out.push_back({key.second, r, vote_count(attribute, key.second)});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.rating != b.rating) return a.rating > b.rating;
    return a.method < b.method;
  });
  return out;
}

RatingTable apply_vote(RatingTable table, const VoteRecord& v) {
  table.apply(v);
  return table;
}

RatingTable replay(std::vector<VoteRecord> votes, std::string baseline_method,
                   EloParams params) {
  std::stable_sort(votes.begin(), votes.end(), [](const auto& a, const auto& b) {
    return a.timestamp < b.timestamp;
  });
  RatingTable table(std::move(baseline_method), params);
  for (const auto& v : votes) table.apply(v);
  return table;
}

std::vector<LeaderboardEntry> leaderboard(const RatingTable& t, Attribute attribute) {
  return t.leaderboard(attribute);
}

std::string to_json_line(const VoteRecord& v) {
  json doc;
  doc["vote_id"] = v.vote_id;
  doc["image_id"] = v.image_id;
  doc["attribute"] = to_string(v.attribute);
  doc["method_a"] = v.method_a;
  doc["method_b"] = v.method_b;
  doc["outcome"] = to_string(v.outcome);
  doc["timestamp"] = v.timestamp;
  return doc.dump();
}

VoteRecord vote_from_json_line(std::string_view line) {
  json doc;
  try {
    doc = json::parse(line);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("vote record is not valid JSON: ") + e.what());
  }
  try {
    VoteRecord v;
    v.vote_id = doc.at("vote_id").get<std::string>();
    v.image_id = doc.value("image_id", std::string());
    v.attribute = parse_attribute(doc.at("attribute").get<std::string>());
    v.method_a = doc.at("method_a").get<std::string>();
    v.method_b = doc.at("method_b").get<std::string>();
    v.outcome = parse_outcome(doc.at("outcome").get<std::string>());
    v.timestamp = doc.at("timestamp").get<std::int64_t>();
    validate(v);
    return v;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed vote record: ") + e.what());
  }
}

std::vector<VoteRecord> load_vote_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_io_error("cannot open vote log", path.string());
  const std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  std::vector<VoteRecord> votes;
  std::size_t start = 0;
  std::size_t lineno = 0;
  while (start < text.size()) {
    const auto end = text.find('\n', start);
    if (end == std::string::npos) break;  // interrupted append
    ++lineno;
    std::string_view line(text.data() + start, end - start);
    start = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      votes.push_back(vote_from_json_line(line));
    } catch (const Error& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return votes;
}

std::string to_json(const std::vector<LeaderboardEntry>& board, int indent) {
  json doc = json::array();
  for (const auto& e : board) {
    doc.push_back({{"method", e.method}, {"rating", e.rating}, {"vote_count", e.vote_count}});
  }
  return doc.dump(indent);
}

}  // namespace limeeval
