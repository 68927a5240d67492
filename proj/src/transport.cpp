// Copyright 2026 The hyperscope Authors
// SPDX-License-Identifier: Apache-2.0

#include "hyperscope/transport.hpp"

#include <arpa/inet.h>
#include <csignal>
#include <cerrno>
#include <cstring>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include "hyperscope/error.hpp"

namespace hyperscope::hflp {
namespace {

[[noreturn]] void io_failure(const std::string& what) {
  throw Error(Errc::io_error, what + ": " + std::strerror(errno));
}

void close_fd(int fd) {
  if (fd >= 0) ::close(fd);
}

void ignore_sigpipe() {
  // Writes to a closed peer must surface as errors, not kill the process.
  static const bool once = [] {
    std::signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)once;
}

}  // namespace

bool ByteStream::read_exact(std::span<std::uint8_t> buf) {
  std::size_t got = 0;
  while (got < buf.size()) {
    const std::size_t n = read_some(buf.subspan(got));
    if (n == 0) {
      if (got == 0) return false;
      throw Error(Errc::remote_protocol_error, "stream ended after " + std::to_string(got) +
                                                   " of " + std::to_string(buf.size()) + " bytes");
    }
    got += n;
  }
  return true;
}

FdStream::FdStream(int read_fd, int write_fd, bool owns_fds)
    : read_fd_(read_fd), write_fd_(write_fd), owns_(owns_fds) {
  ignore_sigpipe();
}

FdStream::~FdStream() {
  if (owns_) {
    close_fd(read_fd_);
    if (write_fd_ != read_fd_) close_fd(write_fd_);
  }
}

std::size_t FdStream::read_some(std::span<std::uint8_t> buf) {
  for (;;) {
    const ssize_t n = ::read(read_fd_, buf.data(), buf.size());
    if (n >= 0) return static_cast<std::size_t>(n);
    if (errno == EINTR) continue;
    io_failure("read");
  }
}

void FdStream::write_all(std::span<const std::uint8_t> data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::write(write_fd_, data.data() + sent, data.size() - sent);
    if (n < 0) {
      if (errno == EINTR) continue;
      io_failure("write");
    }
    sent += static_cast<std::size_t>(n);
  }
}

void FdStream::close_write() {
  if (write_fd_ == read_fd_) {
    ::shutdown(write_fd_, SHUT_WR);
  } else if (write_fd_ >= 0) {
    ::close(write_fd_);
    write_fd_ = -1;
  }
}

StreamPair make_pipe_pair() {
  int ab[2];
  int ba[2];
  if (::pipe(ab) != 0) io_failure("pipe");
  if (::pipe(ba) != 0) {
    close_fd(ab[0]);
    close_fd(ab[1]);
    io_failure("pipe");
  }
  return {std::make_unique<FdStream>(ba[0], ab[1], true),
          std::make_unique<FdStream>(ab[0], ba[1], true)};
}

std::unique_ptr<ByteStream> connect_tcp(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* result = nullptr;
  const std::string service = std::to_string(port);
  if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &result); rc != 0) {
    throw Error(Errc::io_error, "resolve " + host + ": " + ::gai_strerror(rc));
  }
  int fd = -1;
  for (addrinfo* ai = result; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    close_fd(fd);
    fd = -1;
  }
  ::freeaddrinfo(result);
  if (fd < 0) io_failure("connect " + host + ":" + service);
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return std::make_unique<FdStream>(fd, fd, true);
}

TcpListener::TcpListener(const std::string& host, std::uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) io_failure("socket");
  int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    close_fd(fd_);
    throw Error(Errc::invalid_argument, "not an IPv4 address: " + host);
  }
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(fd_, 8) != 0) {
    close_fd(fd_);
    io_failure("bind " + host + ":" + std::to_string(port));
  }
  socklen_t len = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() { close_fd(fd_); }

std::unique_ptr<ByteStream> TcpListener::accept() {
  for (;;) {
    const int fd = ::accept(fd_, nullptr, nullptr);
    if (fd >= 0) {
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      return std::make_unique<FdStream>(fd, fd, true);
    }
    if (errno != EINTR) io_failure("accept");
  }
}

ChildProcessStream::ChildProcessStream(const std::vector<std::string>& argv) {
  if (argv.empty()) throw Error(Errc::invalid_argument, "empty command");
  int to_child[2];
  int from_child[2];
  if (::pipe(to_child) != 0) io_failure("pipe");
  if (::pipe(from_child) != 0) {
    close_fd(to_child[0]);
    close_fd(to_child[1]);
    io_failure("pipe");
  }
  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);

  pid_ = ::fork();
  if (pid_ < 0) io_failure("fork");
  if (pid_ == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::close(to_child[0]);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(from_child[1]);
    ::execvp(args[0], args.data());
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  io_ = std::make_unique<FdStream>(from_child[0], to_child[1], true);
}

ChildProcessStream::~ChildProcessStream() {
  if (io_) io_->close_write();
  io_.reset();
  if (pid_ > 0) {
    int status = 0;
    while (::waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
    }
  }
}

std::size_t ChildProcessStream::read_some(std::span<std::uint8_t> buf) { return io_->read_some(buf); }

void ChildProcessStream::write_all(std::span<const std::uint8_t> data) { io_->write_all(data); }

}  // namespace hyperscope::hflp
