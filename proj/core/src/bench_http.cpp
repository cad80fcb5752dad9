#include <chrono>
#include <deque>
#include <fstream>
#include <iterator>
#include <mutex>
#include <unordered_map>

#include "httplib.h"
#include "json.hpp"
#include "limeeval/bench.hpp"
#include "limeeval/error.hpp"

namespace limeeval {

namespace {

using json = nlohmann::json;

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& msg) {
  send_json(res, status, {{"error", msg}});
}

std::string content_type_for(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  return "application/octet-stream";
}

// Sliding one-minute window of vote timestamps per client token.
class RateLimiter {
 public:
  explicit RateLimiter(std::size_t per_minute) : per_minute_(per_minute) {}

  bool admit(const std::string& token) {
    if (per_minute_ == 0 || token.empty()) return true;
    const auto now = std::chrono::steady_clock::now();
    std::lock_guard lock(mu_);
    auto& q = seen_[token];
    while (!q.empty() && now - q.front() > std::chrono::minutes(1)) q.pop_front();
    if (q.size() >= per_minute_) return false;
    q.push_back(now);
    return true;
  }

 private:
  std::size_t per_minute_;
  std::mutex mu_;
  std::unordered_map<std::string, std::deque<std::chrono::steady_clock::time_point>> seen_;
};

}  // namespace

struct BenchHttpServer::Impl {
  Impl(BenchService& s, Options o)
      : service(s), options(std::move(o)), limiter(options.votes_per_minute) {
    routes();
  }

  void routes() {
    server.Get("/api/health", [this](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, {{"status", "ok"}, {"votes", service.vote_count()}});
    });

    server.Get("/api/pair", [this](const httplib::Request&, httplib::Response& res) {
      const auto p = service.get_pair();
      send_json(res, 200,
                {{"pair_id", p.pair_id},
                 {"attribute", to_string(p.attribute)},
                 {"image_a_url", p.image_a_url},
                 {"image_b_url", p.image_b_url}});
    });

    server.Get(R"(/api/image/([0-9a-f]+)/([ab]))",
               [this](const httplib::Request& req, httplib::Response& res) {
                 try {
                   const auto path = service.image_path(req.matches[1], req.matches[2].str()[0]);
                   std::ifstream in(path, std::ios::binary);
                   if (!in) return send_error(res, 500, "image unavailable");
                   std::string bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
                   res.set_header("Cache-Control", "no-store");
                   res.set_content(std::move(bytes), content_type_for(path));
                 } catch (const NotFoundError& e) {
                   send_error(res, 404, e.what());
                 }
               });

    server.Post("/api/vote", [this](const httplib::Request& req, httplib::Response& res) {
      if (!limiter.admit(req.get_header_value("X-Client-Token"))) {
        return send_error(res, 429, "rate limit exceeded");
      }
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::parse_error&) {
        return send_error(res, 400, "body is not valid JSON");
      }
      if (!body.is_object() || !body.contains("pair_id") || !body.contains("outcome") ||
          !body["pair_id"].is_string() || !body["outcome"].is_string()) {
        return send_error(res, 400, "expected {pair_id, outcome}");
      }
      try {
        const auto ack = service.post_vote(body["pair_id"], body["outcome"]);
        send_json(res, 200,
                  {{"vote_id", ack.vote.vote_id},
                   {"attribute", to_string(ack.vote.attribute)},
                   {"method_a", ack.vote.method_a},
                   {"rating_a", ack.rating_a},
                   {"method_b", ack.vote.method_b},
                   {"rating_b", ack.rating_b}});
      } catch (const NotFoundError& e) {
        send_error(res, 404, e.what());
      } catch (const ConflictError& e) {
        send_error(res, 409, e.what());
      } catch (const ValidationError& e) {
        send_error(res, 400, e.what());
      } catch (const IoError& e) {
        send_error(res, 500, e.what());
      }
    });

    server.Get("/api/leaderboard", [this](const httplib::Request& req, httplib::Response& res) {
      Attribute attr = Attribute::kOverall;
      if (req.has_param("attribute")) {
        try {
          attr = parse_attribute(req.get_param_value("attribute"));
        } catch (const ValidationError& e) {
          return send_error(res, 400, e.what());
        }
      }
      json entries = json::array();
      for (const auto& e : service.get_leaderboard(attr)) {
        entries.push_back({{"method", e.method}, {"rating", e.rating},
                           {"vote_count", e.vote_count}});
      }
      send_json(res, 200, {{"attribute", to_string(attr)}, {"entries", entries}});
    });

    if (!options.static_dir.empty()) {
      server.set_mount_point("/", options.static_dir.string());
    }
  }

  BenchService& service;
  Options options;
  RateLimiter limiter;
  httplib::Server server;
};

BenchHttpServer::BenchHttpServer(BenchService& service)
    : BenchHttpServer(service, Options{}) {}

BenchHttpServer::BenchHttpServer(BenchService& service, Options options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {}

BenchHttpServer::~BenchHttpServer() = default;

int BenchHttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw IoError("cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw IoError("cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void BenchHttpServer::serve() { impl_->server.listen_after_bind(); }

void BenchHttpServer::stop() { impl_->server.stop(); }

}  // namespace limeeval
