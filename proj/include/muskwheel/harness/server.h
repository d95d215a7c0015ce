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


#ifndef MUSKWHEEL_HARNESS_SERVER_H_
#define MUSKWHEEL_HARNESS_SERVER_H_

#include <memory>
#include <string>
#include <vector>

#include "muskwheel/harness/teleop.h"

namespace muskwheel {

struct ServerOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 0;  // 0 picks a free port
  // Finished recordings are saved here as demo_<n>.jsonl; empty keeps
  // them in memory only.
  std::string record_dir;
};

// WebSocket teleop server. Network I/O runs on one thread, the session on
// a control thread ticking at 1 / control_dt in wall-clock time; the two
// talk through a message queue. One client at a time; a second one gets an
// error frame and is closed. A client must send hello before anything
// else.
class TeleopServer {
 public:
  TeleopServer(const TeleopOptions& session, const ServerOptions& options = {});
  ~TeleopServer();
  TeleopServer(const TeleopServer&) = delete;
  TeleopServer& operator=(const TeleopServer&) = delete;

  // Binds and starts both threads. Throws Error when the port is taken.
  void Start();
  void Stop();
  bool running() const;
  unsigned short port() const;

  TeleopState Snapshot() const;
  bool client_connected() const;
  std::vector<Demonstration> Demonstrations() const;
  std::vector<std::string> SavedFiles() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace muskwheel

#endif  // MUSKWHEEL_HARNESS_SERVER_H_
