#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <vector>

#include "fedbed/transport.hpp"

namespace fedbed {

// Server callback: aggregates the peers' updates into new local data.
using ServerCallback =
    std::function<FLValue(const FLValue& privateData, const std::vector<FLValue>& msgs)>;

// Client callback: computes this node's update from its local data, its
// private data and one received message.
using ClientCallback = std::function<FLValue(const FLValue& localData,
                                             const FLValue& privateData,
                                             const FLValue& msg)>;

struct CallbackPair {
    ServerCallback sfun;
    ClientCallback cfun;
};

// Invoked after each completed iteration with the node's new local data.
using IterationObserver = std::function<void(int iter, const FLValue& localData)>;

// Protocol message accounting, for instrumented runs.
struct RunStats {
    int hellosReceived = 0;
    int hellosSent = 0;
    std::vector<int> sentPerIteration;      // envelopes sent, index iter-1
    std::vector<int> processedPerIteration; // envelopes consumed, index iter-1
};

// One federated-learning node. Construction opens the transport and runs
// the startup handshake: node 0 collects one hello from every peer, then
// broadcasts hello; every other node sends its hello to node 0 and waits
// for the broadcast.
class Node {
public:
    explicit Node(const NodeConfig& cfg, const TransportFactory& makeTransport = tcpTransportFactory());
    ~Node();

    Node(const Node&) = delete;
    Node& operator=(const Node&) = delete;

    // Generic centralized algorithm. Per iteration the server (flSrvId)
    // broadcasts its local data; each client computes
    // cfun(localData, pdata, serverData), stores the result as its new
    // local data and sends it to the server; the server aggregates the
    // collected updates with sfun(pdata, msgs) (msgs in ascending source
    // order) and stores the result. Returns the final local data.
    FLValue flCentralized(const CallbackPair& cb, FLValue ldata, FLValue pdata, int noIters = 1);

    // Generic decentralized algorithm. Per iteration every node sends its
    // local data to all peers (seq 1), answers each received seq-1 message
    // with cfun(localData, pdata, msg) without updating its own local data
    // (seq 2), collects the n-1 replies, and finally stores
    // sfun(pdata, msgs). Returns the final local data.
    FLValue flDecentralized(const CallbackPair& cb, FLValue ldata, FLValue pdata, int noIters = 1);

    // Closes the transport. Idempotent; later protocol calls raise UsageError.
    void destroy();

    void setIterationObserver(IterationObserver obs) { observer_ = std::move(obs); }
    const RunStats& stats() const { return stats_; }
    const NodeConfig& config() const { return cfg_; }

private:
    void handshake();
    Envelope awaitEnvelope(int currentIter, const std::function<bool(const Envelope&)>& accept,
                           std::chrono::milliseconds timeout);
    void requireUsable() const;
    FLValue callServer(const CallbackPair& cb, const FLValue& pdata, const std::vector<FLValue>& msgs);
    FLValue callClient(const CallbackPair& cb, const FLValue& ldata, const FLValue& pdata,
                       const FLValue& msg);

    NodeConfig cfg_;
    std::unique_ptr<Transport> transport_;
    std::deque<Envelope> pending_; // envelopes ahead of the processing point
    IterationObserver observer_;
    RunStats stats_;
    bool destroyed_ = false;
};

} // namespace fedbed
