#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "limeeval/bench.hpp"
#include "limeeval/error.hpp"

namespace limeeval {

namespace {

std::string hex_token(std::mt19937_64& rng) {
  char buf[33];
  std::snprintf(buf, sizeof(buf), "%016llx%016llx",
                static_cast<unsigned long long>(rng()),
                static_cast<unsigned long long>(rng()));
  return buf;
}

std::int64_t system_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace

void validate(const MethodManifest& m) {
  if (m.methods.size() < 2) throw ConfigError("manifest needs at least two methods");
  if (m.images.empty()) throw ConfigError("manifest lists no images");
  std::set<std::string> names;
  for (const auto& me : m.methods) {
    if (me.name.empty()) throw ConfigError("manifest has a method without a name");
    if (!names.insert(me.name).second) {
      throw ConfigError("method '" + me.name + "' listed twice");
    }
  }
  if (!names.count(m.baseline)) {
    throw ConfigError("baseline '" + m.baseline + "' is not among the methods");
  }
  for (const auto& me : m.methods) {
    for (const auto& img : m.images) {
      std::error_code ec;
      if (!std::filesystem::is_regular_file(me.dir / img, ec)) {
        throw ConfigError("method '" + me.name + "' is missing image '" + img + "' in " +
                          me.dir.string());
      }
    }
  }
}

MethodManifest load_method_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_io_error("cannot open manifest", path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("manifest is not valid JSON: " + std::string(e.what()));
  }

  MethodManifest m;
  const auto root = path.parent_path();
  try {
    m.baseline = doc.value("baseline", std::string("input"));
    for (const auto& me : doc.at("methods")) {
      std::filesystem::path dir = me.at("dir").get<std::string>();
      if (dir.is_relative()) dir = root / dir;
      m.methods.push_back({me.at("name").get<std::string>(), dir});
    }
    if (doc.contains("images")) {
      m.images = doc.at("images").get<std::vector<std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed manifest: " + std::string(e.what()));
  }

  if (m.images.empty() && !m.methods.empty()) {
    std::set<std::string> common;
    bool first = true;
    for (const auto& me : m.methods) {
      std::set<std::string> here;
      std::error_code ec;
      for (const auto& entry : std::filesystem::directory_iterator(me.dir, ec)) {
        if (entry.is_regular_file()) here.insert(entry.path().filename().string());
      }
      if (first) {
        common = std::move(here);
        first = false;
      } else {
        std::set<std::string> both;
        std::set_intersection(common.begin(), common.end(), here.begin(), here.end(),
                              std::inserter(both, both.begin()));
        common = std::move(both);
      }
    }
    m.images.assign(common.begin(), common.end());
  }
  validate(m);
  return m;
}

BenchService::BenchService(MethodManifest manifest, std::filesystem::path vote_log)
    : BenchService(std::move(manifest), std::move(vote_log), Options{}) {}

BenchService::BenchService(MethodManifest manifest, std::filesystem::path vote_log,
                           Options options)
    : manifest_(std::move(manifest)),
      log_path_(std::move(vote_log)),
      options_(std::move(options)),
      rng_(options_.seed),
      table_(manifest_.baseline, options_.elo) {
  validate(manifest_);

  std::error_code ec;
  if (std::filesystem::exists(log_path_, ec)) {
    // Event sourcing: ratings are whatever the log says they are.
    auto votes = load_vote_log(log_path_);
    next_vote_ = votes.size();
    for (const auto& v : votes) last_timestamp_ = std::max(last_timestamp_, v.timestamp);
    table_ = replay(std::move(votes), manifest_.baseline, options_.elo);

    // Drop an interrupted trailing append so new records start on a fresh line.
    std::ifstream in(log_path_, std::ios::binary);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto last_nl = text.rfind('\n');
    const auto keep = last_nl == std::string::npos ? 0 : last_nl + 1;
    if (keep != text.size()) std::filesystem::resize_file(log_path_, keep);
  } else if (log_path_.has_parent_path()) {
    std::filesystem::create_directories(log_path_.parent_path());
  }

  log_fd_ = ::open(log_path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (log_fd_ < 0) throw_io_error("cannot open vote log", log_path_.string());
}

BenchService::~BenchService() {
  if (log_fd_ >= 0) ::close(log_fd_);
}

std::int64_t BenchService::now() const {
  return options_.clock ? options_.clock() : system_ms();
}

void BenchService::purge_expired_locked(std::int64_t t) {
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    it = it->second.expires_at <= t ? sessions_.erase(it) : std::next(it);
  }
}

PairView BenchService::get_pair() {
  std::lock_guard lock(session_mu_);
  const auto t = now();
  if (++issued_ % 1024 == 0) purge_expired_locked(t);

  const auto n = manifest_.methods.size();
  std::uniform_int_distribution<std::size_t> pick_image(0, manifest_.images.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_first(0, n - 1);
  std::uniform_int_distribution<std::size_t> pick_second(0, n - 2);
  std::uniform_int_distribution<std::size_t> pick_attr(0, kAllAttributes.size() - 1);
  std::bernoulli_distribution swap_sides(0.5);

  PairSession s;
  s.image_id = manifest_.images[pick_image(rng_)];
  const std::size_t i = pick_first(rng_);
  std::size_t j = pick_second(rng_);
  if (j >= i) ++j;
  std::size_t left = std::min(i, j), right = std::max(i, j);
  if (swap_sides(rng_)) std::swap(left, right);
  s.method_a = manifest_.methods[left].name;
  s.method_b = manifest_.methods[right].name;
  s.attribute = kAllAttributes[pick_attr(rng_)];
  s.issued_at = t;
  s.expires_at = t + options_.session_ttl.count();
  do {
    s.pair_id = hex_token(rng_);
  } while (sessions_.count(s.pair_id));

  PairView view{s.pair_id, s.attribute, "/api/image/" + s.pair_id + "/a",
                "/api/image/" + s.pair_id + "/b"};
  sessions_.emplace(s.pair_id, std::move(s));
  return view;
}

void BenchService::append_to_log(const VoteRecord& v) {
  const std::string line = to_json_line(v) + "\n";
  // O_APPEND + one write per record keeps records whole.
  std::size_t written = 0;
  while (written < line.size()) {
    const auto r = ::write(log_fd_, line.data() + written, line.size() - written);
    if (r < 0) {
      if (errno == EINTR) continue;
      throw_io_error("failed appending vote", log_path_.string());
    }
    written += static_cast<std::size_t>(r);
  }
}

VoteAck BenchService::post_vote(const std::string& pair_id, const std::string& outcome) {
  const Outcome parsed = parse_outcome(outcome);

  // Serialises claim -> log append -> table update, so the log order is the
  // application order.
  std::lock_guard writer(writer_mu_);
  PairSession s;
  {
    std::lock_guard lock(session_mu_);
    const auto it = sessions_.find(pair_id);
    const auto t = now();
    if (it == sessions_.end() || it->second.expires_at <= t) {
      if (it != sessions_.end()) sessions_.erase(it);
      throw NotFoundError("unknown or expired pair '" + pair_id + "'");
    }
    if (it->second.voted) throw ConflictError("pair '" + pair_id + "' already voted");
    it->second.voted = true;
    s = it->second;
  }

  VoteRecord v;
  v.vote_id = "v" + std::to_string(next_vote_);
  v.image_id = s.image_id;
  v.attribute = s.attribute;
  v.method_a = s.method_a;
  v.method_b = s.method_b;
  v.outcome = parsed;
  // Replay orders by timestamp, so the log must never go backwards in time.
  v.timestamp = std::max(now(), last_timestamp_);

  try {
    append_to_log(v);
  } catch (...) {
    std::lock_guard lock(session_mu_);
    if (auto it = sessions_.find(pair_id); it != sessions_.end()) it->second.voted = false;
    throw;
  }
  ++next_vote_;
  last_timestamp_ = v.timestamp;

  std::unique_lock table_lock(table_mu_);
  table_.apply(v);
  return {v, table_.rating(v.attribute, v.method_a), table_.rating(v.attribute, v.method_b)};
}

std::vector<LeaderboardEntry> BenchService::get_leaderboard(Attribute attribute) const {
  std::shared_lock lock(table_mu_);
  return table_.leaderboard(attribute);
}

RatingTable BenchService::snapshot() const {
  std::shared_lock lock(table_mu_);
  return table_;
}

std::size_t BenchService::vote_count() const {
  std::shared_lock lock(table_mu_);
  return table_.votes_applied();
}

std::optional<PairSession> BenchService::session(const std::string& pair_id) const {
  std::lock_guard lock(session_mu_);
  const auto it = sessions_.find(pair_id);
  if (it == sessions_.end()) return std::nullopt;
  return it->second;
}

std::filesystem::path BenchService::image_path(const std::string& pair_id, char side) const {
  if (side != 'a' && side != 'b') throw ValidationError("image side must be 'a' or 'b'");
  std::lock_guard lock(session_mu_);
  const auto it = sessions_.find(pair_id);
  if (it == sessions_.end() || it->second.expires_at <= now()) {
    throw NotFoundError("unknown or expired pair '" + pair_id + "'");
  }
  const auto& name = side == 'a' ? it->second.method_a : it->second.method_b;
  for (const auto& me : manifest_.methods) {
    if (me.name == name) return me.dir / it->second.image_id;
  }
  throw NotFoundError("method vanished from manifest");
}

}  // namespace limeeval
