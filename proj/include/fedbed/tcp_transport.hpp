#pragma once

#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <thread>
#include <vector>

#include "fedbed/transport.hpp"

namespace fedbed {

// Localhost socket transport. One persistent connection per ordered pair,
// opened lazily by the sender with retry, so per-sender FIFO follows from
// the byte-stream ordering. A background acceptor plus one reader per
// incoming connection feed the inbox.
class TcpTransport final : public Transport {
public:
    // Binds and listens on 127.0.0.1:(basePort + nodeId).
    // BindError if the port is taken, ConfigError on invalid config.
    explicit TcpTransport(const NodeConfig& cfg);
    ~TcpTransport() override;

    void send(int dst, const Envelope& e) override;
    Envelope recv(std::chrono::milliseconds timeout) override;
    void close() override;

private:
    void acceptLoop();
    void readerLoop(int fd);
    int connectionFor(int dst); // lazy connect with retry

    int listenFd_ = -1;
    std::thread acceptThread_;

    std::mutex readersMu_;
    std::vector<std::thread> readers_;
    std::vector<int> acceptedFds_;

    std::mutex sendMu_;
    std::map<int, int> peerFd_;

    std::mutex inboxMu_;
    std::condition_variable inboxCv_;
    std::deque<Envelope> inbox_;
    std::exception_ptr readError_;
    bool closed_ = false;
};

} // namespace fedbed
