#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "limeeval/elo.hpp"
#include "limeeval/error.hpp"
#include "temp_dir.hpp"

using namespace limeeval;

namespace {

VoteRecord vote(std::string a, std::string b, Outcome o, Attribute attr = Attribute::kOverall,
                std::int64_t ts = 0) {
  return {"v", "img", attr, std::move(a), std::move(b), o, ts};
}

std::vector<VoteRecord> random_log(std::size_t n, std::uint64_t seed,
                                   const std::vector<std::string>& methods) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pm(0, methods.size() - 1);
  std::uniform_int_distribution<int> po(0, 3), pa(0, 4);
  std::vector<VoteRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    auto a = pm(rng), b = pm(rng);
    while (b == a) b = pm(rng);
    out.push_back({"v" + std::to_string(i), "img", kAllAttributes[pa(rng)], methods[a],
                   methods[b], static_cast<Outcome>(po(rng)), static_cast<std::int64_t>(i)});
  }
  return out;
}

}  // namespace

TEST(ExpectedScore, Examples) {
  EXPECT_EQ(expected_score(1500, 1500), 0.5);
  EXPECT_NEAR(expected_score(1900, 1500), 10.0 / 11.0, 1e-15);
  for (double d : {-300.0, -12.5, 0.0, 77.0, 800.0}) {
    EXPECT_NEAR(expected_score(1500 + d, 1500) + expected_score(1500, 1500 + d), 1.0, 1e-15);
  }
}

TEST(ApplyVote, DecisiveExample) {
  auto t = apply_vote(RatingTable{}, vote("a", "b", Outcome::kABetter));
  EXPECT_EQ(t.rating(Attribute::kOverall, "a"), 1508.0);
  EXPECT_EQ(t.rating(Attribute::kOverall, "b"), 1492.0);
  t = apply_vote(RatingTable{}, vote("a", "b", Outcome::kBBetter));
  EXPECT_EQ(t.rating(Attribute::kOverall, "a"), 1492.0);
  EXPECT_EQ(t.rating(Attribute::kOverall, "b"), 1508.0);
}

TEST(ApplyVote, BothGoodAndBothBad) {
  auto good = apply_vote(RatingTable{}, vote("a", "b", Outcome::kBothGood));
  EXPECT_EQ(good.rating(Attribute::kOverall, "a"), 1504.0);
  EXPECT_EQ(good.rating(Attribute::kOverall, "b"), 1504.0);
  EXPECT_EQ(good.rating(Attribute::kOverall, "input"), 1492.0);

  auto bad = apply_vote(RatingTable{}, vote("a", "b", Outcome::kBothBad));
  EXPECT_EQ(bad.rating(Attribute::kOverall, "a"), 1496.0);
  EXPECT_EQ(bad.rating(Attribute::kOverall, "b"), 1496.0);
  EXPECT_EQ(bad.rating(Attribute::kOverall, "input"), 1508.0);
}

TEST(ApplyVote, BaselineCompetitorSkipsSelfMatch) {
  auto t = apply_vote(RatingTable{}, vote("input", "b", Outcome::kBothGood));
  EXPECT_EQ(t.rating(Attribute::kOverall, "b"), 1504.0);
  EXPECT_EQ(t.rating(Attribute::kOverall, "input"), 1496.0);
  EXPECT_EQ(t.vote_count(Attribute::kOverall, "input"), 1u);
}

TEST(ApplyVote, SnapshotMakesVirtualMatchesCommute) {
  RatingTable t;
  t.apply(vote("a", "c", Outcome::kABetter));
  t.apply(vote("b", "input", Outcome::kABetter));
  auto ab = apply_vote(t, vote("a", "b", Outcome::kBothGood));
  auto ba = apply_vote(t, vote("b", "a", Outcome::kBothGood));
  for (const char* m : {"a", "b", "input"}) {
    EXPECT_EQ(ab.rating(Attribute::kOverall, m), ba.rating(Attribute::kOverall, m)) << m;
  }
}

TEST(ApplyVote, AttributesAreIndependent) {
  RatingTable t;
  t.apply(vote("a", "b", Outcome::kABetter, Attribute::kColor));
  EXPECT_EQ(t.rating(Attribute::kColor, "a"), 1508.0);
  EXPECT_EQ(t.rating(Attribute::kOverall, "a"), 1500.0);
  EXPECT_FALSE(t.has(Attribute::kOverall, "a"));
}

TEST(ApplyVote, RejectsSelfComparison) {
  EXPECT_THROW(apply_vote(RatingTable{}, vote("a", "a", Outcome::kABetter)), ValidationError);
  EXPECT_THROW(parse_attribute("sharpness"), ValidationError);
  EXPECT_THROW(parse_outcome("tie"), ValidationError);
}

TEST(Replay, ConservationAndBoundedStep) {
  const std::vector<std::string> methods = {"input", "a", "b", "c", "d"};
  const auto log = random_log(10000, 1, methods);
  RatingTable t;
  for (const auto& v : log) {
    const auto before = t;
    t.apply(v);
    for (const auto& m : methods) {
      EXPECT_LE(std::abs(t.rating(v.attribute, m) - before.rating(v.attribute, m)), 16.0);
    }
  }
  double seeded = 0;
  for (auto a : kAllAttributes) {
    for (const auto& m : methods) seeded += t.has(a, m) ? 1500.0 : 0.0;
  }
  EXPECT_NEAR(t.total_rating(), seeded, 1e-6);
}

TEST(Replay, DeterministicAndTimestampOrdered) {
  const std::vector<std::string> methods = {"input", "a", "b", "c"};
  const auto log = random_log(2000, 2, methods);
  const auto t1 = replay(log);
  auto shuffled = log;
  std::mt19937_64 rng(3);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  EXPECT_EQ(replay(shuffled), t1);
  EXPECT_EQ(replay({}), RatingTable{});

  RatingTable manual;
  manual.apply(log[0]);
  EXPECT_EQ(replay({log[0]}), manual);
}

TEST(Replay, ConsistentWinnerTopsLeaderboard) {
  const std::vector<std::string> methods = {"input", "x", "b", "c", "d", "e"};
  auto log = random_log(1000, 4, methods);
  for (auto& v : log) {
    v.attribute = Attribute::kOverall;
    if (v.outcome == Outcome::kABetter || v.outcome == Outcome::kBBetter) {
      if (v.method_a == "x") v.outcome = Outcome::kABetter;
      if (v.method_b == "x") v.outcome = Outcome::kBBetter;
    }
  }
  const auto board = replay(log).leaderboard(Attribute::kOverall);
  ASSERT_FALSE(board.empty());
  EXPECT_EQ(board[0].method, "x");
  EXPECT_GT(board[0].rating, board[1].rating);
}

TEST(Leaderboard, SortedWithNameTieBreak) {
  RatingTable t;
  t.apply(vote("b", "a", Outcome::kBothGood));
  const auto board = leaderboard(t, Attribute::kOverall);
  ASSERT_EQ(board.size(), 3u);
  EXPECT_EQ(board[0].method, "a");
  EXPECT_EQ(board[1].method, "b");
  EXPECT_EQ(board[2].method, "input");
  EXPECT_EQ(board[0].vote_count, 1u);
  EXPECT_TRUE(leaderboard(t, Attribute::kColor).empty());
}

TEST(VoteLog, JsonLinesRoundTripAndPartialTail) {
  limeeval::testing::TempDir dir;
  const auto log = random_log(20, 5, {"input", "a", "b"});
  {
    std::ofstream out(dir / "votes.jsonl");
    for (const auto& v : log) out << to_json_line(v) << "\n";
    out << "\n" << R"({"vote_id": "partial", "image_id")";
  }
  EXPECT_EQ(load_vote_log(dir / "votes.jsonl"), log);
  EXPECT_EQ(vote_from_json_line(to_json_line(log[3])), log[3]);

  std::ofstream(dir / "bad.jsonl") << "{\"vote_id\": 1}\n";
  EXPECT_THROW(load_vote_log(dir / "bad.jsonl"), FormatError);
  EXPECT_THROW(load_vote_log(dir / "missing.jsonl"), IoError);
  EXPECT_THROW(vote_from_json_line(R"({"vote_id":"v","image_id":"i","attribute":"overall",)"
                                   R"("method_a":"a","method_b":"b","outcome":"meh","timestamp":1})"),
               ValidationError);
}
