/* SPDX-License-Identifier: Apache-2.0 */

#include <gridloop/service/tcp_server.hpp>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <map>
#include <vector>

#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <fmt/format.h>

namespace gridloop::service {

namespace {

void set_nonblocking(int fd) { ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) | O_NONBLOCK); }

std::pair<std::string, std::string> split_listen(const std::string &listen) {
  auto colon = listen.rfind(':');
  if (colon == std::string::npos)
    return {"", listen};
  std::string host = listen.substr(0, colon);
  if (host.size() >= 2 && host.front() == '[' && host.back() == ']')
    host = host.substr(1, host.size() - 2);
  return {host, listen.substr(colon + 1)};
}

struct Connection {
  int fd = -1;
  SessionId session = 0;
  MessageReader reader;
  std::string out;
};

} // namespace

TcpServer::TcpServer(ControlService &service, const std::string &listen) : service_(service) {
  auto [host, port] = split_listen(listen);
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo *res = nullptr;
  if (int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(), port.c_str(), &hints, &res); rc != 0)
    throw Error(fmt::format("cannot resolve listen address '{}': {}", listen, ::gai_strerror(rc)));
  std::string last_error = "no usable address";
  for (auto *a = res; a; a = a->ai_next) {
    int fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
    if (fd < 0)
      continue;
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd, a->ai_addr, a->ai_addrlen) == 0 && ::listen(fd, 16) == 0) {
      listen_fd_ = fd;
      break;
    }
    last_error = std::strerror(errno);
    ::close(fd);
  }
  ::freeaddrinfo(res);
  if (listen_fd_ < 0)
    throw Error(fmt::format("cannot listen on '{}': {}", listen, last_error));
  set_nonblocking(listen_fd_);

  sockaddr_storage bound{};
  socklen_t len = sizeof bound;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr *>(&bound), &len);
  if (bound.ss_family == AF_INET)
    port_ = ntohs(reinterpret_cast<sockaddr_in *>(&bound)->sin_port);
  else
    port_ = ntohs(reinterpret_cast<sockaddr_in6 *>(&bound)->sin6_port);

  if (::pipe(wake_pipe_) != 0) {
    ::close(listen_fd_);
    throw Error("cannot create wake pipe");
  }
  set_nonblocking(wake_pipe_[0]);
  set_nonblocking(wake_pipe_[1]);
  service_.on_output = [this] { wake(); };
}

TcpServer::~TcpServer() {
  stop();
  service_.on_output = nullptr;
  for (int fd : {listen_fd_, wake_pipe_[0], wake_pipe_[1]})
    if (fd >= 0)
      ::close(fd);
}

void TcpServer::start() {
  if (running_.exchange(true))
    return;
  thread_ = std::thread([this] { loop(); });
}

void TcpServer::stop() {
  if (!running_.exchange(false))
    return;
  wake();
  thread_.join();
}

void TcpServer::wake() {
  char b = 1;
  [[maybe_unused]] auto n = ::write(wake_pipe_[1], &b, 1);
}

void TcpServer::flush(double timeout) {
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout);
  while (std::chrono::steady_clock::now() < deadline) {
    wake();
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    if (connections_.load() == 0 && pending_bytes_.load() == 0)
      return;
  }
}

void TcpServer::loop() {
  std::map<int, Connection> conns;
  auto drop = [&](int fd) {
    service_.close_session(conns[fd].session);
    ::close(fd);
    conns.erase(fd);
  };
  std::vector<pollfd> fds;
  std::vector<char> buf(64 * 1024);
  while (running_.load()) {
    std::size_t pending = 0;
    for (auto &[fd, c] : conns) {
      // Only pull from the session queue once the socket has caught up, so a
      // slow reader backs up into the service's bounded backlog.
      if (c.out.empty())
        for (const auto &p : service_.take(c.session))
          c.out += *p;
      pending += c.out.size();
    }
    pending_bytes_ = pending;

    fds.clear();
    fds.push_back({listen_fd_, POLLIN, 0});
    fds.push_back({wake_pipe_[0], POLLIN, 0});
    for (auto &[fd, c] : conns)
      fds.push_back({fd, static_cast<short>(POLLIN | (c.out.empty() ? 0 : POLLOUT)), 0});
    if (::poll(fds.data(), fds.size(), 50) < 0 && errno != EINTR)
      break;

    if (fds[1].revents & POLLIN)
      while (::read(wake_pipe_[0], buf.data(), buf.size()) > 0) {
      }
    if (fds[0].revents & POLLIN) {
      for (;;) {
        int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0)
          break;
        set_nonblocking(fd);
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        conns[fd].fd = fd;
        conns[fd].session = service_.open_session();
      }
    }

    std::vector<int> dead;
    for (std::size_t k = 2; k < fds.size(); ++k) {
      const int fd = fds[k].fd;
      auto &c = conns[fd];
      if (fds[k].revents & (POLLERR | POLLNVAL)) {
        dead.push_back(fd);
        continue;
      }
      if (fds[k].revents & (POLLIN | POLLHUP)) {
        ssize_t n = ::recv(fd, buf.data(), buf.size(), 0);
        if (n == 0 || (n < 0 && errno != EAGAIN && errno != EWOULDBLOCK)) {
          dead.push_back(fd);
          continue;
        }
        if (n > 0) {
          c.reader.push(std::span<const char>(buf.data(), static_cast<std::size_t>(n)));
          while (auto msg = c.reader.next())
            service_.receive(c.session, *msg);
          if (c.reader.oversized()) {
            dead.push_back(fd);
            continue;
          }
        }
      }
      if (!c.out.empty()) {
        ssize_t n = ::send(fd, c.out.data(), c.out.size(), MSG_NOSIGNAL);
        if (n > 0)
          c.out.erase(0, static_cast<std::size_t>(n));
        else if (n < 0 && errno != EAGAIN && errno != EWOULDBLOCK) {
          dead.push_back(fd);
          continue;
        }
      }
      if (c.out.empty() && service_.closing(c.session)) {
        for (const auto &p : service_.take(c.session))
          c.out += *p;
        if (c.out.empty())
          dead.push_back(fd);
      }
    }
    for (int fd : dead)
      if (conns.count(fd))
        drop(fd);
    connections_ = conns.size();
  }
  for (auto &[fd, c] : conns) {
    service_.close_session(c.session);
    ::close(fd);
  }
  connections_ = 0;
}

} // namespace gridloop::service
