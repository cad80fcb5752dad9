#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace limeeval {

/// Aspect a rater is asked to judge.
enum class Attribute { kOverall, kIllumination, kNoiseArtifacts, kBlurriness, kColor };

inline constexpr std::array<Attribute, 5> kAllAttributes = {
    Attribute::kOverall, Attribute::kIllumination, Attribute::kNoiseArtifacts,
    Attribute::kBlurriness, Attribute::kColor};

enum class Outcome { kABetter, kBBetter, kBothGood, kBothBad };

std::string_view to_string(Attribute a);
std::string_view to_string(Outcome o);
/// Throw ValidationError on unknown names.
Attribute parse_attribute(std::string_view name);
Outcome parse_outcome(std::string_view name);

struct VoteRecord {
  std::string vote_id;
  std::string image_id;
  Attribute attribute = Attribute::kOverall;
  std::string method_a;
  std::string method_b;
  Outcome outcome = Outcome::kABetter;
  std::int64_t timestamp = 0;  ///< milliseconds since the Unix epoch

  bool operator==(const VoteRecord&) const = default;
};

void validate(const VoteRecord& v);

struct EloParams {
  double initial_rating = 1500.0;
  double k_decisive = 16.0;
  double k_both = 8.0;

  bool operator==(const EloParams&) const = default;
};

/// Probability that a player rated `r_a` beats one rated `r_b`.
double expected_score(double r_a, double r_b);

struct LeaderboardEntry {
  std::string method;
  double rating = 0.0;
  std::size_t vote_count = 0;
};

/// Per-attribute Elo state. "Both good" / "both bad" votes are scored as two
/// virtual matches against the baseline (unenhanced input) player.
class RatingTable {
 public:
  explicit RatingTable(std::string baseline_method = "input", EloParams params = {});

  const std::string& baseline_method() const { return baseline_; }
  const EloParams& params() const { return params_; }

  /// Rating of `method` for `attribute`; the initial rating if never seen.
  double rating(Attribute attribute, const std::string& method) const;
  std::size_t vote_count(Attribute attribute, const std::string& method) const;
  bool has(Attribute attribute, const std::string& method) const;
  std::size_t votes_applied() const { return votes_applied_; }

  /// Sum of all stored ratings, over every attribute.
  double total_rating() const;

  void apply(const VoteRecord& v);

  /// Descending rating, ties broken by method name.
  std::vector<LeaderboardEntry> leaderboard(Attribute attribute) const;

  bool operator==(const RatingTable&) const = default;

 private:
  using Key = std::pair<Attribute, std::string>;
  double& slot(Attribute attribute, const std::string& method);

  std::string baseline_;
  EloParams params_;
  std::map<Key, double> ratings_;
  std::map<Key, std::size_t> counts_;
  std::size_t votes_applied_ = 0;
};

RatingTable apply_vote(RatingTable table, const VoteRecord& v);

/// Applies `votes` in timestamp order (stable for equal timestamps).
RatingTable replay(std::vector<VoteRecord> votes, std::string baseline_method = "input",
                   EloParams params = {});

std::vector<LeaderboardEntry> leaderboard(const RatingTable& t, Attribute attribute);

// Vote log: one JSON object per line.
std::string to_json_line(const VoteRecord& v);
VoteRecord vote_from_json_line(std::string_view line);
/// Reads a vote log. A final line without a terminating newline is treated
/// as an interrupted append and skipped.
std::vector<VoteRecord> load_vote_log(const std::filesystem::path& path);

std::string to_json(const std::vector<LeaderboardEntry>& board, int indent = 2);

}  // namespace limeeval
