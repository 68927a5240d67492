// Copyright 2026 The hyperscope Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

// Byte-stream transports for the logit protocol: TCP sockets, file
// descriptor pairs (stdio, pipes) and child processes.

namespace hyperscope::hflp {

class ByteStream {
 public:
  virtual ~ByteStream() = default;
  /// Returns 0 at end of stream.
  virtual std::size_t read_some(std::span<std::uint8_t> buf) = 0;
  virtual void write_all(std::span<const std::uint8_t> data) = 0;

  /// Fills `buf` completely. Returns false if the stream ended before the
  /// first byte; throws Error(remote_protocol_error) if it ended part way.
  bool read_exact(std::span<std::uint8_t> buf);
};

/// Stream over a read and a write file descriptor.
class FdStream : public ByteStream {
 public:
  FdStream(int read_fd, int write_fd, bool owns_fds);
  ~FdStream() override;
  FdStream(const FdStream&) = delete;
  FdStream& operator=(const FdStream&) = delete;

  std::size_t read_some(std::span<std::uint8_t> buf) override;
  void write_all(std::span<const std::uint8_t> data) override;
  /// Closes the write side, signalling end of stream to the peer.
  void close_write();

 private:
  int read_fd_;
  int write_fd_;
  bool owns_;
};

/// Unidirectional pipe pair wired as two connected streams.
struct StreamPair {
  std::unique_ptr<FdStream> first;
  std::unique_ptr<FdStream> second;
};
StreamPair make_pipe_pair();

std::unique_ptr<ByteStream> connect_tcp(const std::string& host, std::uint16_t port);

class TcpListener {
 public:
  /// Binds host:port; port 0 picks an ephemeral port.
  explicit TcpListener(const std::string& host = "127.0.0.1", std::uint16_t port = 0);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  std::uint16_t port() const noexcept { return port_; }
  std::unique_ptr<ByteStream> accept();

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

/// Spawns `argv` with its stdin/stdout connected to this stream. The child
/// is reaped when the stream is destroyed.
class ChildProcessStream : public ByteStream {
 public:
  explicit ChildProcessStream(const std::vector<std::string>& argv);
  ~ChildProcessStream() override;
  ChildProcessStream(const ChildProcessStream&) = delete;
  ChildProcessStream& operator=(const ChildProcessStream&) = delete;

  std::size_t read_some(std::span<std::uint8_t> buf) override;
  void write_all(std::span<const std::uint8_t> data) override;

 private:
  std::unique_ptr<FdStream> io_;
  int pid_ = -1;
};

}  // namespace hyperscope::hflp
