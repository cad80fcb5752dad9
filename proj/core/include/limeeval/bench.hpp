#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>
#include <vector>

#include "limeeval/elo.hpp"

namespace limeeval {

struct MethodEntry {
  std::string name;
  std::filesystem::path dir;
};

/// Enhancement methods whose outputs are compared, one directory each.
/// Image ids are file names relative to every method directory.
struct MethodManifest {
  std::vector<MethodEntry> methods;
  std::string baseline;
  std::vector<std::string> images;
};

/// Throws ConfigError when the manifest cannot back a voting session.
void validate(const MethodManifest& m);

/// JSON: {"baseline": "input", "methods": [{"name", "dir"}...], "images": [...]}.
/// Relative directories resolve against the manifest's own directory. When
/// "images" is absent, the file names common to every directory are used.
MethodManifest load_method_manifest(const std::filesystem::path& path);

/// An issued comparison. method_a is shown on the left, method_b on the right.
struct PairSession {
  std::string pair_id;
  std::string image_id;
  Attribute attribute = Attribute::kOverall;
  std::string method_a;
  std::string method_b;
  std::int64_t issued_at = 0;  ///< ms since epoch
  std::int64_t expires_at = 0;
  bool voted = false;
};

/// What a voter receives: no method names, only per-session image URLs.
struct PairView {
  std::string pair_id;
  Attribute attribute = Attribute::kOverall;
  std::string image_a_url;
  std::string image_b_url;
};

struct VoteAck {
  VoteRecord vote;
  double rating_a = 0.0;
  double rating_b = 0.0;
};

/// Pairwise preference collection backed by an append-only vote log.
///
/// Ratings are derived state: at construction the log is replayed, and every
/// accepted vote is appended to it before the table is updated. Sessions live
/// in memory only.
class BenchService {
 public:
  struct Options {
    std::chrono::milliseconds session_ttl = std::chrono::minutes(30);
    std::uint64_t seed = std::random_device{}();
    EloParams elo;
    /// Milliseconds since epoch; defaults to the system clock.
    std::function<std::int64_t()> clock;
  };

  BenchService(MethodManifest manifest, std::filesystem::path vote_log);
  BenchService(MethodManifest manifest, std::filesystem::path vote_log, Options options);
  ~BenchService();

  BenchService(const BenchService&) = delete;
  BenchService& operator=(const BenchService&) = delete;

  PairView get_pair();

  /// Throws NotFoundError (unknown or expired pair), ConflictError (already
  /// voted) or ValidationError (bad outcome).
  VoteAck post_vote(const std::string& pair_id, const std::string& outcome);

  std::vector<LeaderboardEntry> get_leaderboard(Attribute attribute) const;
  RatingTable snapshot() const;
  std::size_t vote_count() const;

  std::optional<PairSession> session(const std::string& pair_id) const;
  /// File backing the left ('a') or right ('b') image of a live session.
  std::filesystem::path image_path(const std::string& pair_id, char side) const;

  const MethodManifest& manifest() const { return manifest_; }
  const std::filesystem::path& vote_log() const { return log_path_; }

 private:
  std::int64_t now() const;
  void append_to_log(const VoteRecord& v);
  void purge_expired_locked(std::int64_t now);

  MethodManifest manifest_;
  std::filesystem::path log_path_;
  Options options_;
  int log_fd_ = -1;

  mutable std::mutex session_mu_;
  std::mt19937_64 rng_;
  std::map<std::string, PairSession> sessions_;
  std::size_t issued_ = 0;

  mutable std::shared_mutex table_mu_;
  std::mutex writer_mu_;
  RatingTable table_;
  std::uint64_t next_vote_ = 0;
  std::int64_t last_timestamp_ = 0;
};

/// HTTP front end:
///   GET  /api/health
///   GET  /api/pair                 -> {pair_id, attribute, image_a_url, image_b_url}
///   GET  /api/image/<pair_id>/<a|b>
///   POST /api/vote {pair_id, outcome}
///   GET  /api/leaderboard?attribute=A
/// plus static assets from `static_dir` when set.
class BenchHttpServer {
 public:
  struct Options {
    std::filesystem::path static_dir;
    /// Votes per minute per X-Client-Token header; 0 disables the limit.
    std::size_t votes_per_minute = 0;
  };

  explicit BenchHttpServer(BenchService& service);
  BenchHttpServer(BenchService& service, Options options);
  ~BenchHttpServer();

  /// Binds to `port` (0 picks a free port) and returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop() is called. Requires a prior bind().
  void serve();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace limeeval
