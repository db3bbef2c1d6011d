#pragma once

#include <poll.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <functional>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "seatrot/net.hpp"
#include "seatrot/session.hpp"

namespace seatrot {

inline UtcMillis now_utc_millis() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

/// Writes session files off the frame path. Snapshots are dropped when the
/// queue is full; final logs always wait for room.
class SessionFlusher {
 public:
  struct Job {
    std::filesystem::path path;
    std::string text;
    std::optional<std::filesystem::path> remove_after;
    bool final = false;
  };

  explicit SessionFlusher(std::size_t capacity = 64) : capacity_(capacity) {
    worker_ = std::thread([this] { loop(); });
  }
  SessionFlusher(const SessionFlusher&) = delete;
  SessionFlusher& operator=(const SessionFlusher&) = delete;
  ~SessionFlusher() { shutdown(); }

  bool try_push(Job job) {
    std::lock_guard lk(mu_);
    if (queue_.size() >= capacity_ || closed_) {
      ++dropped_;
      return false;
    }
    queue_.push_back(std::move(job));
    cv_.notify_all();
    return true;
  }

  void push(Job job) {
    std::unique_lock lk(mu_);
    cv_.wait(lk, [&] { return queue_.size() < capacity_ || closed_; });
    if (closed_) return;
    queue_.push_back(std::move(job));
    cv_.notify_all();
  }

  /// Blocks until every queued job has been attempted.
  void drain() {
    std::unique_lock lk(mu_);
    cv_.wait(lk, [&] { return queue_.empty() && !busy_; });
  }

  void shutdown() {
    {
      std::lock_guard lk(mu_);
      if (closed_) return;
      closed_ = true;
      cv_.notify_all();
    }
    worker_.join();
  }

  std::uint64_t failures() const { return failures_.load(); }
  std::uint64_t dropped() const {
    std::lock_guard lk(mu_);
    return dropped_;
  }
  std::optional<std::filesystem::path> last_final() const {
    std::lock_guard lk(mu_);
    return last_final_;
  }

 private:
  void loop() {
    std::unique_lock lk(mu_);
    while (true) {
      cv_.wait(lk, [&] { return !queue_.empty() || closed_; });
      if (queue_.empty()) return;
      Job job = std::move(queue_.front());
      queue_.pop_front();
      busy_ = true;
      cv_.notify_all();
      lk.unlock();
      bool ok = true;
      try {
        std::filesystem::create_directories(job.path.parent_path());
        write_text_file(job.path, job.text);
        if (job.remove_after) std::filesystem::remove(*job.remove_after);
      } catch (const std::exception& e) {
        ok = false;
        ++failures_;
        std::cerr << "seatrot: session write failed: " << e.what() << "\n";
      }
      lk.lock();
      if (ok && job.final) last_final_ = job.path;
      busy_ = false;
      cv_.notify_all();
    }
  }

  std::size_t capacity_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Job> queue_;
  bool closed_ = false;
  bool busy_ = false;
  std::uint64_t dropped_ = 0;
  std::atomic<std::uint64_t> failures_{0};
  std::optional<std::filesystem::path> last_final_;
  std::thread worker_;
};

/// The long-running engine: one UDP receive loop feeding one session at a
/// time, feedback fan-out to the display address and every bridge client.
class EngineService {
 public:
  explicit EngineService(EngineConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    udp_.set_receive_buffer(4 * 1024 * 1024);
    udp_.enable_drop_counter();
    udp_.bind(cfg_.bind_host, cfg_.listen_port);
    bridge_.listen(cfg_.bind_host, cfg_.ui_bridge_port);
    feedback_addr_ = net::resolve_ipv4(cfg_.feedback_host, cfg_.feedback_port);
    if (!cfg_.prompts_file.empty()) texts_ = PromptTexts::load(cfg_.prompts_file);
  }

  std::uint16_t pose_port() const { return udp_.port(); }
  std::uint16_t bridge_port() const { return bridge_.port(); }

  /// Runs until stop(). The open session, if any, is closed and flushed.
  void run() {
    using clock = std::chrono::steady_clock;
    while (!stop_requested_.load()) {
      std::vector<pollfd> fds;
      fds.push_back({udp_.fd(), POLLIN, 0});
      fds.push_back({bridge_.fd(), POLLIN, 0});
      for (const auto& c : clients_) fds.push_back({c.stream.fd(), POLLIN, 0});
      ::poll(fds.data(), fds.size(), 20);

      std::lock_guard lk(mu_);
      if (fds[0].revents & POLLIN) drain_udp();
      if (fds[1].revents & POLLIN) accept_clients();
      for (std::size_t i = 0; i < clients_.size(); ++i) {
        if (fds[i + 2].revents & (POLLIN | POLLHUP | POLLERR)) read_client(clients_[i]);
      }
      std::erase_if(clients_, [](const Client& c) { return !c.stream.valid(); });

      if (session_ && clock::now() - last_trackable_ >
                          std::chrono::duration<double>(cfg_.idle_timeout_s)) {
        close_session("idle timeout");
      }
    }
    std::lock_guard lk(mu_);
    close_session("shutdown");
    flusher_.drain();
  }

  void stop() { stop_requested_.store(true); }

  nlohmann::json stats_json() const {
    std::lock_guard lk(mu_);
    return stats_json_locked();
  }

  LatencyStats stats() const {
    std::lock_guard lk(mu_);
    return session_ ? session_->stats() : last_stats_;
  }

  bool session_open() const {
    std::lock_guard lk(mu_);
    return session_.has_value();
  }

  int sessions_closed() const {
    std::lock_guard lk(mu_);
    return sessions_closed_;
  }

  /// Waits for pending log writes, then reports the newest final log.
  std::optional<std::filesystem::path> last_session_file() {
    flusher_.drain();
    return flusher_.last_final();
  }

  std::uint64_t write_failures() const { return flusher_.failures(); }

 private:
  struct Client {
    net::TcpStream stream;
    FrameReader reader;
  };

  void drain_udp() {
    // Bounded per wakeup so bridge clients and timers are still serviced.
    for (int i = 0; i < 256; ++i) {
      auto dgram = udp_.try_receive();
      if (!dgram) break;
      ++datagrams_;
      on_datagram(*dgram);
    }
  }

  void on_datagram(const Bytes& bytes) {
    if (!session_) open_session();
    const auto reps_before = session_->logged_reps();
    auto out = session_->on_datagram(bytes);
    if (out.status != FrameStatus::Processed) return;
    if (out.trackable) last_trackable_ = std::chrono::steady_clock::now();
    udp_.send_to(out.feedback_bytes, feedback_addr_);
    if (!clients_.empty()) broadcast(frame_message(ByteView(out.feedback_bytes)));
    if (session_->logged_reps() != reps_before) {
      // A rep just landed; keep a snapshot in case the final write fails.
      flusher_.try_push({partial_path(), serialize_session(session_->snapshot()), {}, false});
    }
  }

  void open_session() {
    session_.emplace(cfg_, now_utc_millis());
    last_trackable_ = std::chrono::steady_clock::now();
    partial_name_ = session_filename(session_->snapshot()) + ".partial";
  }

  void close_session(const char* reason) {
    if (!session_) return;
    auto log = session_->snapshot();
    last_stats_ = session_->stats();
    if (session_->frames_processed() > 0) {
      const auto dir = std::filesystem::path(cfg_.sessions_dir);
      auto text = serialize_session(log);
      flusher_.push({dir / session_filename(log), std::move(text), partial_path(), true});
      std::cerr << "seatrot: session closed (" << reason << "), " << log.reps.size()
                << " reps, score " << log.total_score << "\n";
    }
    session_.reset();
    ++sessions_closed_;
  }

  std::filesystem::path partial_path() const {
    return std::filesystem::path(cfg_.sessions_dir) / partial_name_;
  }

  void accept_clients() {
    while (auto s = bridge_.try_accept()) {
      s->set_nonblocking();
      Client c{std::move(*s), {}};
      nlohmann::json hello = {{"type", "hello"},
                              {"protocol_version", wire::kVersion},
                              {"exercise", "seated"},
                              {"config", to_json(cfg_)},
                              {"prompts", prompt_table_json()}};
      if (send_to_client(c, frame_message(hello.dump()))) clients_.push_back(std::move(c));
    }
  }

  void read_client(Client& c) {
    Bytes chunk;
    long n = 0;
    try {
      n = c.stream.receive_some(chunk);
    } catch (const std::exception&) {
      c.stream.close();
      return;
    }
    if (n == 0) {
      c.stream.close();
      return;
    }
    if (n < 0) return;
    c.reader.feed(chunk);
    try {
      while (auto msg = c.reader.next()) handle_control(c, as_text(*msg));
    } catch (const std::length_error&) {
      c.stream.close();
    }
  }

  void handle_control(Client& c, std::string_view text) {
    nlohmann::json ack = {{"type", "ack"}};
    try {
      const auto j = nlohmann::json::parse(text);
      const auto cmd = j.at("command").get<std::string>();
      ack["command"] = cmd;
      if (cmd == "start") {
        close_session("restart");
        open_session();
        ack["ok"] = true;
      } else if (cmd == "stop") {
        const bool was_open = session_.has_value();
        close_session("stop command");
        ack["ok"] = true;
        ack["closed"] = was_open;
      } else if (cmd == "stats") {
        ack["ok"] = true;
        ack["stats"] = stats_json_locked();
      } else {
        ack["ok"] = false;
        ack["error"] = "unknown command";
      }
    } catch (const std::exception& e) {
      ack["ok"] = false;
      ack["error"] = e.what();
    }
    send_to_client(c, frame_message(ack.dump()));
  }

  nlohmann::json prompt_table_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& p : kPromptTable) j[std::to_string(static_cast<int>(p.code))] = texts_.text(p.code);
    return j;
  }

  nlohmann::json stats_json_locked() const {
    auto j = (session_ ? session_->stats() : last_stats_).to_json();
    j["frames_dropped_backlog"] = udp_.kernel_drops();
    j["datagrams_received"] = datagrams_;
    j["session_open"] = session_.has_value();
    j["sessions_closed"] = sessions_closed_;
    j["bridge_clients"] = clients_.size();
    return j;
  }

  bool send_to_client(Client& c, const Bytes& frame) {
    try {
      c.stream.send_all(frame);
      return true;
    } catch (const std::exception&) {
      c.stream.close();
      return false;
    }
  }

  void broadcast(const Bytes& frame) {
    for (auto& c : clients_) send_to_client(c, frame);
  }

  EngineConfig cfg_;
  net::UdpSocket udp_;
  net::TcpListener bridge_;
  sockaddr_in feedback_addr_{};
  PromptTexts texts_;
  std::vector<Client> clients_;
  std::optional<SessionProcessor> session_;
  LatencyStats last_stats_;
  std::string partial_name_;
  std::chrono::steady_clock::time_point last_trackable_;
  std::uint64_t datagrams_ = 0;
  int sessions_closed_ = 0;
  std::atomic<bool> stop_requested_{false};
  mutable std::mutex mu_;
  SessionFlusher flusher_;
};

}  // namespace seatrot
