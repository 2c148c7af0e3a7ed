#include "umae/extern_scorer.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <csignal>
#include <cstring>

#include "umae/errors.hpp"
#include "umae/jsonl.hpp"

namespace umae {

namespace {

constexpr const char* kHelloName = "umae-scorer";
constexpr int kProtocolVersion = 1;

[[noreturn]] void throw_errno(const std::string& what) {
    throw IoError(what + ": " + std::strerror(errno));
}

} // namespace

FdChannel::FdChannel(int read_fd, int write_fd) : read_fd_(read_fd), write_fd_(write_fd) {
    if (read_fd_ < 0 || write_fd_ < 0) {
        throw IoError("bad channel file descriptor");
    }
    // Writes to a dead peer must surface as EPIPE, not SIGPIPE.
    static const bool sigpipe_ignored = [] {
        ::signal(SIGPIPE, SIG_IGN);
        return true;
    }();
    (void)sigpipe_ignored;
}

FdChannel::~FdChannel() {
    if (write_fd_ >= 0 && write_fd_ != read_fd_) {
        ::close(write_fd_);
    }
    if (read_fd_ >= 0) {
        ::close(read_fd_);
    }
}

bool FdChannel::read_line(std::string& line) {
    for (;;) {
        const size_t nl = buffer_.find('\n');
        if (nl != std::string::npos) {
            line.assign(buffer_, 0, nl);
            buffer_.erase(0, nl + 1);
            return true;
        }
        char chunk[4096];
        const ssize_t n = ::read(read_fd_, chunk, sizeof(chunk));
        if (n < 0) {
            if (errno == EINTR) {
                continue;
            }
            throw_errno("channel read");
        }
        if (n == 0) {
            if (!buffer_.empty()) { // unterminated trailing line
                line = std::move(buffer_);
                buffer_.clear();
                return true;
            }
            return false;
        }
        buffer_.append(chunk, static_cast<size_t>(n));
    }
}

void FdChannel::write_line(const std::string& line) {
    std::string framed = line;
    framed.push_back('\n');
    size_t off = 0;
    while (off < framed.size()) {
        const ssize_t n = ::write(write_fd_, framed.data() + off, framed.size() - off);
        if (n < 0) {
            if (errno == EINTR) {
                continue;
            }
            throw_errno("channel write");
        }
        off += static_cast<size_t>(n);
    }
}

void FdChannel::close_write() {
    if (write_fd_ >= 0 && write_fd_ != read_fd_) {
        ::close(write_fd_);
        write_fd_ = -1;
    } else if (write_fd_ >= 0) {
        ::shutdown(write_fd_, SHUT_WR);
    }
}

namespace {

// FdChannel that also owns a child process and reaps it on destruction.
class SubprocessChannel : public FdChannel {
public:
    SubprocessChannel(int read_fd, int write_fd, pid_t pid) : FdChannel(read_fd, write_fd), pid_(pid) {}
    ~SubprocessChannel() override {
        close_write(); // EOF on the child's stdin lets it exit cleanly
        int status = 0;
        ::waitpid(pid_, &status, 0);
    }

private:
    pid_t pid_;
};

} // namespace

std::unique_ptr<LineChannel> spawn_scorer(const std::string& command) {
    int to_child[2];
    int from_child[2];
    if (::pipe(to_child) != 0 || ::pipe(from_child) != 0) {
        throw_errno("pipe");
    }
    const pid_t pid = ::fork();
    if (pid < 0) {
        throw_errno("fork");
    }
    if (pid == 0) {
        ::dup2(to_child[0], STDIN_FILENO);
        ::dup2(from_child[1], STDOUT_FILENO);
        ::close(to_child[0]);
        ::close(to_child[1]);
        ::close(from_child[0]);
        ::close(from_child[1]);
        ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    return std::make_unique<SubprocessChannel>(from_child[0], to_child[1], pid);
}

std::unique_ptr<LineChannel> connect_tcp(const std::string& host, uint16_t port) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const std::string service = std::to_string(port);
    if (::getaddrinfo(host.c_str(), service.c_str(), &hints, &res) != 0) {
        throw IoError("cannot resolve " + host);
    }
    int fd = -1;
    for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
        fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) {
            continue;
        }
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
            break;
        }
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0) {
        throw IoError("cannot connect to " + host + ":" + service);
    }
    return std::make_unique<FdChannel>(fd, fd);
}

std::pair<std::unique_ptr<FdChannel>, std::unique_ptr<FdChannel>> channel_pair() {
    int fds[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) != 0) {
        throw_errno("socketpair");
    }
    return {std::make_unique<FdChannel>(fds[0], fds[0]), std::make_unique<FdChannel>(fds[1], fds[1])};
}

namespace {

Json parse_message(const std::string& line, const char* side) {
    Json msg = Json::parse(line, nullptr, false);
    if (msg.is_discarded() || !msg.is_object()) {
        throw ProtocolError(std::string("malformed ") + side + " message: " + line);
    }
    return msg;
}

} // namespace

RemoteScorer::RemoteScorer(std::unique_ptr<LineChannel> channel) : channel_(std::move(channel)) {
    channel_->write_line(Json{{"hello", kHelloName}, {"version", kProtocolVersion}}.dump());
    std::string line;
    if (!channel_->read_line(line)) {
        throw ProtocolError("scorer closed connection during handshake");
    }
    const Json hello = parse_message(line, "handshake");
    try {
        if (hello.at("hello").get<std::string>() != kHelloName ||
            hello.at("version").get<int>() != kProtocolVersion) {
            throw ProtocolError("scorer handshake mismatch: " + line);
        }
        vocab_ = Vocab(hello.at("vocab").get<std::vector<std::string>>());
    } catch (const Json::exception& e) {
        throw ProtocolError(std::string("bad handshake: ") + e.what());
    }
}

std::vector<double> RemoteScorer::logprobs(const std::vector<std::string>& context) const {
    std::lock_guard<std::mutex> lock(mutex_);
    const uint64_t id = next_id_++;
    channel_->write_line(Json{{"id", id}, {"context", context}}.dump());
    std::string line;
    if (!channel_->read_line(line)) {
        throw ProtocolError("scorer closed connection");
    }
    const Json reply = parse_message(line, "scorer");
    try {
        if (reply.at("id").get<uint64_t>() != id) {
            throw ProtocolError("response id mismatch");
        }
        const Json& table = reply.at("logprobs");
        std::vector<double> out(vocab_.size());
        double mass = 0.0;
        for (size_t i = 0; i < vocab_.size(); ++i) {
            auto it = table.find(vocab_.tokens()[i]);
            if (it == table.end()) {
                throw ProtocolError("response missing logprob for token " + vocab_.tokens()[i]);
            }
            out[i] = it->get<double>();
            mass += std::exp(out[i]);
        }
        if (std::abs(mass - 1.0) > 1e-6) {
            throw ProtocolError("scorer distribution sums to " + std::to_string(mass));
        }
        return out;
    } catch (const Json::exception& e) {
        throw ProtocolError(std::string("bad scorer response: ") + e.what());
    }
}

void serve_scorer(const TokenScorer& scorer, LineChannel& channel) {
    std::string line;
    if (!channel.read_line(line)) {
        return; // client never spoke
    }
    const Json hello = parse_message(line, "client");
    if (hello.value("hello", "") != kHelloName || hello.value("version", 0) != kProtocolVersion) {
        throw ProtocolError("client handshake mismatch: " + line);
    }
    channel.write_line(
        Json{{"hello", kHelloName}, {"version", kProtocolVersion}, {"vocab", scorer.vocab().tokens()}}.dump());
    while (channel.read_line(line)) {
        if (line.empty()) {
            continue;
        }
        const Json request = parse_message(line, "client");
        uint64_t id = 0;
        std::vector<std::string> context;
        try {
            id = request.at("id").get<uint64_t>();
            context = request.at("context").get<std::vector<std::string>>();
        } catch (const Json::exception& e) {
            throw ProtocolError(std::string("bad request: ") + e.what());
        }
        const std::vector<double> lps = scorer.logprobs(context);
        Json table = Json::object();
        for (size_t i = 0; i < lps.size(); ++i) {
            table[scorer.vocab().tokens()[i]] = lps[i];
        }
        channel.write_line(Json{{"id", id}, {"logprobs", table}}.dump());
    }
}

TcpServer::TcpServer(uint16_t port) : listen_fd_(-1), port_(0) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) {
        throw_errno("socket");
    }
    const int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        throw_errno("bind");
    }
    if (::listen(listen_fd_, 1) != 0) {
        throw_errno("listen");
    }
    socklen_t len = sizeof(addr);
    if (::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
        throw_errno("getsockname");
    }
    port_ = ntohs(addr.sin_port);
}

TcpServer::~TcpServer() {
    if (listen_fd_ >= 0) {
        ::close(listen_fd_);
    }
}

void TcpServer::serve(const TokenScorer& scorer, bool once) {
    for (;;) {
        const int client = ::accept(listen_fd_, nullptr, nullptr);
        if (client < 0) {
            if (errno == EINTR) {
                continue;
            }
            throw_errno("accept");
        }
        {
            FdChannel channel(client, client);
            serve_scorer(scorer, channel);
        }
        if (once) {
            return;
        }
    }
}

std::unique_ptr<TokenScorer> open_scorer(const std::string& model_spec) {
    if (model_spec.rfind("extern:", 0) == 0) {
        return std::make_unique<RemoteScorer>(spawn_scorer(model_spec.substr(7)));
    }
    if (model_spec.rfind("tcp:", 0) == 0) {
        const std::string rest = model_spec.substr(4);
        const size_t colon = rest.rfind(':');
        std::string host = "127.0.0.1";
        std::string port_str = rest;
        if (colon != std::string::npos) {
            host = rest.substr(0, colon);
            port_str = rest.substr(colon + 1);
        }
        int port = 0;
        try {
            port = std::stoi(port_str);
        } catch (const std::exception&) {
            throw ConfigError("bad tcp scorer spec: " + model_spec);
        }
        if (port <= 0 || port > 65535) {
            throw ConfigError("bad tcp port in: " + model_spec);
        }
        return std::make_unique<RemoteScorer>(connect_tcp(host, static_cast<uint16_t>(port)));
    }
    return std::make_unique<NgramScorer>(load_ngram(model_spec));
}

} // namespace umae
