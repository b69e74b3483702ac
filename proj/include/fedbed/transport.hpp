#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <string>

#include "fedbed/config.hpp"
#include "fedbed/envelope.hpp"

namespace fedbed {

struct NodeAddress {
    std::string host;
    int port = 0;
};

inline NodeAddress addressFor(const NodeConfig& cfg, int nodeId) {
    return NodeAddress{"127.0.0.1", cfg.basePort + nodeId};
}

// Point-to-point delivery between nodes. Exactly-once, per-sender FIFO;
// a handle is owned by one protocol engine at a time.
class Transport {
public:
    explicit Transport(NodeConfig cfg) : cfg_(std::move(cfg)) {}
    virtual ~Transport() = default;

    Transport(const Transport&) = delete;
    Transport& operator=(const Transport&) = delete;

    // Enqueues e for delivery to dst exactly once; non-blocking with
    // respect to the receiver. UsageError on self-send or bad dst,
    // ConnectError once the retry budget is exhausted.
    virtual void send(int dst, const Envelope& e) = 0;

    // Next envelope per the inbox ordering contract. TimeoutError after
    // timeout, ClosedError once the handle is closed.
    virtual Envelope recv(std::chrono::milliseconds timeout) = 0;

    // Idempotent. Pending recvs fail with ClosedError.
    virtual void close() = 0;

    // send to every other node; attempts all destinations and reports
    // the failing ones in a single ConnectError.
    void broadcast(const Envelope& e);

    const NodeConfig& config() const { return cfg_; }
    int nodeId() const { return cfg_.nodeId; }
    int noNodes() const { return cfg_.noNodes; }

protected:
    NodeConfig cfg_;
};

using TransportFactory = std::function<std::unique_ptr<Transport>(const NodeConfig&)>;

// Factory for the localhost socket transport.
TransportFactory tcpTransportFactory();

} // namespace fedbed
