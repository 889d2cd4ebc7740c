/*
 * Copyright 2026 The bbfi Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <mutex>
#include <thread>

#include "bbfi/error.h"
#include "bbfi/models.h"
#include "json.hpp"

extern char** environ;

namespace bbfi {

using nlohmann::json;

struct ExternalPredictor::Process {
  pid_t pid = -1;
  int fd = -1;         // socket connected to the child's stdin and stdout
  int stderr_fd = -1;  // unlinked temporary file holding the child's stderr
  std::string pending; // bytes read past the last complete line
  std::uint64_t next_id = 1;
  std::mutex mu;

  std::string ChildStderr() const {
    if (stderr_fd < 0) return "";
    std::string out;
    char buf[4096];
    ssize_t got;
    off_t offset = 0;
    while ((got = pread(stderr_fd, buf, sizeof buf, offset)) > 0) {
      out.append(buf, static_cast<std::size_t>(got));
      offset += got;
    }
    if (out.size() > 2000) out = "..." + out.substr(out.size() - 2000);
    while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
    return out;
  }

  [[noreturn]] void Fail(const std::string& message) const {
    const std::string err = ChildStderr();
    throw Error("external predictor: " + message + (err.empty() ? "" : "; child stderr: " + err));
  }

  void SendAll(const std::string& text) {
    std::size_t sent = 0;
    while (sent < text.size()) {
      const ssize_t n = send(fd, text.data() + sent, text.size() - sent, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        Fail(std::string("cannot write request: ") + std::strerror(errno));
      }
      sent += static_cast<std::size_t>(n);
    }
  }

  std::string ReadLine() {
    for (;;) {
      const auto nl = pending.find('\n');
      if (nl != std::string::npos) {
        std::string line = pending.substr(0, nl);
        pending.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      char buf[65536];
      const ssize_t n = recv(fd, buf, sizeof buf, 0);
      if (n < 0) {
        if (errno == EINTR) continue;
        Fail(std::string("cannot read response: ") + std::strerror(errno));
      }
      if (n == 0) {
        int status = 0;
        std::string how = "closed its output";
        // EOF usually means the child is exiting; give it a moment to be reaped.
        pid_t reaped = 0;
        for (int tries = 0; tries < 100 && reaped == 0; ++tries) {
          reaped = waitpid(pid, &status, WNOHANG);
          if (reaped == 0) std::this_thread::sleep_for(std::chrono::milliseconds(10));
        }
        if (reaped == pid) {
          pid = -1;
          if (WIFEXITED(status)) how = "exited with status " + std::to_string(WEXITSTATUS(status));
          if (WIFSIGNALED(status)) how = "was killed by signal " + std::to_string(WTERMSIG(status));
        }
        Fail("child " + how + " before answering");
      }
      pending.append(buf, static_cast<std::size_t>(n));
    }
  }
};

ExternalPredictor::ExternalPredictor(std::vector<std::string> command, Schema schema)
    : Predictor(std::move(schema)), command_(std::move(command)),
      process_(std::make_unique<Process>()) {
  if (command_.empty() || command_.front().empty()) {
    throw Error("external predictor command is empty");
  }
  int fds[2];
  if (socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0) {
    throw Error(std::string("socketpair failed: ") + std::strerror(errno));
  }
  char tmpl[] = "/tmp/bbfi-external-XXXXXX";
  const int err_fd = mkostemp(tmpl, O_CLOEXEC);
  if (err_fd < 0) {
    close(fds[0]);
    close(fds[1]);
    throw Error(std::string("cannot create stderr capture file: ") + std::strerror(errno));
  }
  unlink(tmpl);

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, fds[1], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, fds[1], STDOUT_FILENO);
  posix_spawn_file_actions_adddup2(&actions, err_fd, STDERR_FILENO);
  std::vector<char*> argv;
  for (auto& arg : command_) argv.push_back(arg.data());
  argv.push_back(nullptr);
  pid_t pid = -1;
  const int rc = posix_spawnp(&pid, argv[0], &actions, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  close(fds[1]);
  if (rc != 0) {
    close(fds[0]);
    close(err_fd);
    throw Error("cannot start external predictor '" + command_.front() + "': " +
                std::strerror(rc));
  }
  process_->pid = pid;
  process_->fd = fds[0];
  process_->stderr_fd = err_fd;
}

ExternalPredictor::~ExternalPredictor() {
  Process& p = *process_;
  if (p.fd >= 0) close(p.fd);
  if (p.pid > 0) {
    // Closing stdin asks the child to finish; escalate if it lingers.
    int status = 0;
    bool reaped = false;
    for (int i = 0; i < 200 && !reaped; ++i) {
      reaped = waitpid(p.pid, &status, WNOHANG) == p.pid;
      if (!reaped) std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    if (!reaped) {
      kill(p.pid, SIGKILL);
      waitpid(p.pid, &status, 0);
    }
  }
  if (p.stderr_fd >= 0) close(p.stderr_fd);
}

std::uint64_t ExternalPredictor::requests_sent() const {
  std::lock_guard lock(process_->mu);
  return process_->next_id - 1;
}

std::string ExternalPredictor::Describe() const {
  std::string out = "external(";
  for (std::size_t i = 0; i < command_.size(); ++i) out += (i ? " " : "") + command_[i];
  return out + ")";
}

std::vector<double> ExternalPredictor::Predict(const Matrix& rows) const {
  CheckWidth(rows);
  if (rows.rows() == 0) return {};
  json x = json::array();
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    json row = json::array();
    for (std::size_t j = 0; j < rows.cols(); ++j) {
      const FeatureKind& kind = schema().kinds[j];
      if (kind.is_categorical()) {
        row.push_back(kind.levels().at(static_cast<std::size_t>(rows(r, j))));
      } else {
        row.push_back(rows(r, j));
      }
    }
    x.push_back(std::move(row));
  }

  Process& p = *process_;
  std::lock_guard lock(p.mu);
  if (p.pid < 0) p.Fail("child is no longer running");
  const std::uint64_t id = p.next_id++;
  p.SendAll(json{{"id", id}, {"x", std::move(x)}}.dump() + "\n");
  const std::string line = p.ReadLine();

  json response;
  try {
    response = json::parse(line);
  } catch (const json::exception&) {
    p.Fail("malformed response line: " + line);
  }
  if (!response.is_object() || !response.contains("id") || !response["id"].is_number_integer()) {
    p.Fail("response lacks an integer id: " + line);
  }
  const auto got = response["id"].get<std::int64_t>();
  if (got != static_cast<std::int64_t>(id)) {
    p.Fail("response id " + std::to_string(got) + " does not match request id " +
           std::to_string(id));
  }
  if (!response.contains("y") || !response["y"].is_array()) {
    p.Fail("response lacks a y array: " + line);
  }
  const json& y = response["y"];
  if (y.size() != rows.rows()) {
    p.Fail("response has " + std::to_string(y.size()) + " predictions for " +
           std::to_string(rows.rows()) + " rows");
  }
  std::vector<double> out;
  out.reserve(y.size());
  for (const auto& v : y) {
    if (!v.is_number()) p.Fail("non-numeric prediction in response line: " + line);
    out.push_back(v.get<double>());
  }
  return out;
}

std::unique_ptr<ExternalPredictor> SpawnExternal(std::vector<std::string> command, Schema schema) {
  return std::make_unique<ExternalPredictor>(std::move(command), std::move(schema));
}

}  // namespace bbfi
