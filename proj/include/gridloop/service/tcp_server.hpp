/* POSIX TCP transport for the control service: one listening socket, one
 * poll() thread, non-blocking connections.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <gridloop/service/control_service.hpp>

#include <atomic>
#include <string>
#include <thread>

namespace gridloop::service {

class TcpServer {
public:
  /// listen: "host:port", ":port" or "port"; port 0 picks a free one.
  /// Throws Error when the address can not be bound.
  TcpServer(ControlService &service, const std::string &listen);
  ~TcpServer();
  TcpServer(const TcpServer &) = delete;
  TcpServer &operator=(const TcpServer &) = delete;

  std::uint16_t port() const { return port_; }
  void start();
  /// Waits (up to timeout seconds) for every queued message to be written.
  void flush(double timeout);
  void stop();
  std::size_t connections() const { return connections_.load(); }

private:
  void loop();
  void wake();

  ControlService &service_;
  int listen_fd_ = -1;
  int wake_pipe_[2] = {-1, -1};
  std::uint16_t port_ = 0;
  std::atomic<bool> running_{false};
  std::atomic<std::size_t> connections_{0};
  std::atomic<std::size_t> pending_bytes_{0};
  std::thread thread_;
};

} // namespace gridloop::service
