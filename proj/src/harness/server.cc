// Copyright 2026 The Muskwheel Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "muskwheel/harness/server.h"

#include <atomic>
#include <chrono>
#include <deque>
#include <filesystem>
#include <mutex>
#include <thread>
#include <type_traits>
#include <utility>
#include <variant>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "muskwheel/core/errors.h"

namespace muskwheel {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

// frames queued beyond this for a slow client are dropped
constexpr size_t kMaxOutbox = 256;

struct Event {
  enum class Kind { kOpen, kMessage, kClose };
  Kind kind;
  int conn;
  std::string text;
};

}  // namespace

struct TeleopServer::Impl {
  class Connection;

  Impl(const TeleopOptions& s, const ServerOptions& o)
      : session_options(s), options(o), acceptor(ioc) {}

  void Accept();
  void Push(Event e) {
    std::lock_guard<std::mutex> lock(inbox_mu);
    inbox.push_back(std::move(e));
  }
  // called from the control thread
  void Send(int conn, std::string frame, bool close = false);
  void ControlLoop();
  void Finish(TeleopSession* session);

  TeleopOptions session_options;
  ServerOptions options;
  asio::io_context ioc;
  tcp::acceptor acceptor;
  unsigned short port = 0;
  std::thread io_thread;
  std::thread control_thread;
  std::atomic<bool> running{false};

  // io thread only
  std::shared_ptr<Connection> conn;  // the active client
  int conn_id = 0;                   // last id handed out

  std::mutex inbox_mu;
  std::deque<Event> inbox;

  mutable std::mutex state_mu;
  TeleopState snapshot;
  bool connected = false;
  std::vector<Demonstration> demos;
  std::vector<std::string> files;
};

class TeleopServer::Impl::Connection
    : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, Impl* server, int id, bool reject)
      : ws_(std::move(socket)), server_(server), id_(id), reject_(reject) {}

  void Run() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      self->OnAccept(ec);
    });
  }

  int id() const { return id_; }

  void Send(std::string frame) {
    if (closing_) return;
    if (outbox_.size() >= kMaxOutbox) return;
    outbox_.push_back(std::move(frame));
    if (outbox_.size() == 1) Write();
  }

  void Close() {
    if (closing_) return;
    closing_ = true;
    if (!outbox_.empty()) return;  // closed after the last write
    DoClose();
  }

 private:
  void OnAccept(beast::error_code ec) {
    if (ec) return;
    if (reject_) {
      Send(ErrorFrame("another client is connected"));
      Close();
      return;
    }
    server_->Push({Event::Kind::kOpen, id_, {}});
    Read();
  }

  void Read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, size_t) {
      self->OnRead(ec);
    });
  }

  void OnRead(beast::error_code ec) {
    if (ec) {
      server_->Push({Event::Kind::kClose, id_, {}});
      if (server_->conn.get() == this) server_->conn.reset();
      return;
    }
    if (ws_.got_text()) {
      server_->Push({Event::Kind::kMessage, id_, beast::buffers_to_string(buffer_.data())});
    } else {
      Send(ErrorFrame("binary frames are not supported"));
    }
    buffer_.consume(buffer_.size());
    Read();
  }

  void Write() {
    ws_.text(true);
    ws_.async_write(asio::buffer(outbox_.front()),
                    [self = shared_from_this()](beast::error_code ec, size_t) {
                      self->OnWrite(ec);
                    });
  }

  void OnWrite(beast::error_code ec) {
    if (ec) {
      outbox_.clear();
      return;
    }
    outbox_.pop_front();
    if (!outbox_.empty()) {
      Write();
    } else if (closing_) {
      DoClose();
    }
  }

  void DoClose() {
    ws_.async_close(websocket::close_code::normal,
                    [self = shared_from_this()](beast::error_code) {});
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::deque<std::string> outbox_;
  Impl* server_;
  int id_;
  bool reject_;
  bool closing_ = false;
};

void TeleopServer::Impl::Accept() {
  acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
    if (ec) return;  // acceptor closed
    const bool busy = conn != nullptr;
    auto c = std::make_shared<Connection>(std::move(socket), this, ++conn_id, busy);
    if (!busy) conn = c;
    c->Run();
    Accept();
  });
}

void TeleopServer::Impl::Send(int id, std::string frame, bool close) {
  asio::post(ioc, [this, id, frame = std::move(frame), close]() mutable {
    if (!conn || conn->id() != id) return;
    conn->Send(std::move(frame));
    if (close) conn->Close();
  });
}

void TeleopServer::Impl::Finish(TeleopSession* session) {
  if (!session->recording()) return;
  session->SetRecording(false);
  const Demonstration& demo = session->demonstration();
  std::string path;
  if (!options.record_dir.empty()) {
    std::lock_guard<std::mutex> lock(state_mu);
    path = (std::filesystem::path(options.record_dir) /
            ("demo_" + std::to_string(demos.size()) + ".jsonl")).string();
  }
  if (!path.empty()) SaveDemonstration(demo, path);
  std::lock_guard<std::mutex> lock(state_mu);
  demos.push_back(demo);
  if (!path.empty()) files.push_back(path);
}

void TeleopServer::Impl::ControlLoop() {
  TeleopSession session(session_options);
  {
    std::lock_guard<std::mutex> lock(state_mu);
    snapshot = session.state();
  }
  int active = -1;
  bool hello = false;
  const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double>(session_options.control_dt));
  auto next = std::chrono::steady_clock::now();
  std::deque<Event> events;
  while (running) {
    {
      std::lock_guard<std::mutex> lock(inbox_mu);
      events.swap(inbox);
    }
    for (Event& e : events) {
      switch (e.kind) {
        case Event::Kind::kOpen:
          active = e.conn;
          hello = false;
          break;
        case Event::Kind::kClose:
          if (e.conn != active) break;
          session.Disconnect();
          Finish(&session);
          active = -1;
          hello = false;
          break;
        case Event::Kind::kMessage: {
          if (e.conn != active) break;
          try {
            const ClientMessage msg = ParseClientMessage(e.text);
            if (const auto* h = std::get_if<HelloMessage>(&msg)) {
              if (h->ver != kProtocolVersion) {
                Send(active, ErrorFrame("unsupported protocol version " +
                                        std::to_string(h->ver)), true);
              } else {
                hello = true;
                Send(active, HelloFrame());
              }
            } else if (!hello) {
              Send(active, ErrorFrame("hello required first"));
            } else if (const auto* c = std::get_if<TeleopCommand>(&msg)) {
              session.Submit(*c);  // stale seq dropped
            } else if (const auto* r = std::get_if<RecordMessage>(&msg)) {
              if (r->on) {
                session.SetRecording(true);
              } else {
                Finish(&session);
              }
              Send(active, RecordFrame(session.recording()));
            }
          } catch (const Error& err) {
            Send(active, ErrorFrame(err.what()));
          }
          break;
        }
      }
    }
    events.clear();

    bool due = false;
    try {
      due = session.Tick();
    } catch (const Error& err) {
      // keep serving; the arm holds its last command
      if (active >= 0) Send(active, ErrorFrame(err.what()));
    }
    {
      std::lock_guard<std::mutex> lock(state_mu);
      snapshot = session.state();
      connected = active >= 0;
    }
    if (due && active >= 0 && hello) Send(active, StateFrame(session.state()));

    next += period;
    const auto now = std::chrono::steady_clock::now();
    if (next < now - 10 * period) next = now;  // do not burst after a stall
    std::this_thread::sleep_until(next);
  }
  Finish(&session);
}

TeleopServer::TeleopServer(const TeleopOptions& session, const ServerOptions& options)
    : impl_(std::make_unique<Impl>(session, options)) {
  TeleopSession check(session);  // validates the options up front
}

TeleopServer::~TeleopServer() { Stop(); }

void TeleopServer::Start() {
  Impl& s = *impl_;
  if (s.running) return;
  if (!s.options.record_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(s.options.record_dir, ec);
    if (ec) throw Error("cannot create " + s.options.record_dir + ": " + ec.message());
  }
  try {
    const tcp::endpoint endpoint(asio::ip::make_address(s.options.address), s.options.port);
    s.acceptor.open(endpoint.protocol());
    s.acceptor.set_option(asio::socket_base::reuse_address(true));
    s.acceptor.bind(endpoint);
    s.acceptor.listen();
    s.port = s.acceptor.local_endpoint().port();
  } catch (const boost::system::system_error& e) {
    beast::error_code ignored;
    s.acceptor.close(ignored);
    throw Error("cannot listen on " + s.options.address + ":" +
                std::to_string(s.options.port) + ": " + e.what());
  }
  s.running = true;
  s.Accept();
  s.io_thread = std::thread([&s] { s.ioc.run(); });
  s.control_thread = std::thread([&s] { s.ControlLoop(); });
}

void TeleopServer::Stop() {
  Impl& s = *impl_;
  if (!s.running.exchange(false)) return;
  if (s.control_thread.joinable()) s.control_thread.join();
  asio::post(s.ioc, [&s] {
    beast::error_code ignored;
    s.acceptor.close(ignored);
    s.conn.reset();
  });
  s.ioc.stop();
  if (s.io_thread.joinable()) s.io_thread.join();
}

bool TeleopServer::running() const { return impl_->running; }
unsigned short TeleopServer::port() const { return impl_->port; }

TeleopState TeleopServer::Snapshot() const {
  std::lock_guard<std::mutex> lock(impl_->state_mu);
  return impl_->snapshot;
}

bool TeleopServer::client_connected() const {
  std::lock_guard<std::mutex> lock(impl_->state_mu);
  return impl_->connected;
}

std::vector<Demonstration> TeleopServer::Demonstrations() const {
  std::lock_guard<std::mutex> lock(impl_->state_mu);
  return impl_->demos;
}

std::vector<std::string> TeleopServer::SavedFiles() const {
  std::lock_guard<std::mutex> lock(impl_->state_mu);
  return impl_->files;
}

}  // namespace muskwheel
