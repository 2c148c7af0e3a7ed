#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <utility>

#include "umae/scorer.hpp"

namespace umae {

// Newline-delimited message transport: one UTF-8 JSON object per line.
class LineChannel {
public:
    virtual ~LineChannel() = default;
    // False on EOF; the returned line excludes the trailing newline.
    virtual bool read_line(std::string& line) = 0;
    virtual void write_line(const std::string& line) = 0;
};

// Channel over POSIX file descriptors (socket, pipe pair). Takes ownership.
class FdChannel : public LineChannel {
public:
    FdChannel(int read_fd, int write_fd);
    ~FdChannel() override;
    FdChannel(const FdChannel&) = delete;
    FdChannel& operator=(const FdChannel&) = delete;

    bool read_line(std::string& line) override;
    void write_line(const std::string& line) override;

    // Signals EOF to the peer while keeping the read side open.
    void close_write();

private:
    int read_fd_;
    int write_fd_;
    std::string buffer_;
};

// Spawns `command` via the shell with stdin/stdout piped; the channel owns
// the child and reaps it on destruction.
std::unique_ptr<LineChannel> spawn_scorer(const std::string& command);

std::unique_ptr<LineChannel> connect_tcp(const std::string& host, uint16_t port);

// Connected AF_UNIX socket pair for in-process client/server tests.
std::pair<std::unique_ptr<FdChannel>, std::unique_ptr<FdChannel>> channel_pair();

// Client side of the scorer wire protocol. The handshake runs in the
// constructor: send {"hello":"umae-scorer","version":1}, receive the same
// plus the vocabulary. Each logprobs() call is one request/response
// round-trip {"id",u64,"context":[...]} -> {"id","logprobs":{token:lp}};
// the response must cover the full vocabulary. Thread-safe (requests are
// serialized on an internal mutex).
class RemoteScorer : public TokenScorer {
public:
    explicit RemoteScorer(std::unique_ptr<LineChannel> channel);

    const Vocab& vocab() const override { return vocab_; }
    std::vector<double> logprobs(const std::vector<std::string>& context) const override;

private:
    mutable std::unique_ptr<LineChannel> channel_;
    mutable std::mutex mutex_;
    mutable uint64_t next_id_ = 1;
    Vocab vocab_;
};

// Server side: answers one client on the channel until EOF.
void serve_scorer(const TokenScorer& scorer, LineChannel& channel);

// TCP listener serving one client at a time. Construct with port 0 for an
// ephemeral port and read it back with port().
class TcpServer {
public:
    explicit TcpServer(uint16_t port);
    ~TcpServer();
    TcpServer(const TcpServer&) = delete;
    TcpServer& operator=(const TcpServer&) = delete;

    uint16_t port() const { return port_; }
    // Blocks; serves clients sequentially, forever unless `once`.
    void serve(const TokenScorer& scorer, bool once);

private:
    int listen_fd_;
    uint16_t port_;
};

// "extern:<command>" -> subprocess bridge; "tcp:[host:]<port>" -> TCP bridge;
// anything else -> n-gram model file path.
std::unique_ptr<TokenScorer> open_scorer(const std::string& model_spec);

} // namespace umae
