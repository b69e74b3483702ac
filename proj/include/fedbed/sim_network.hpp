#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <vector>

#include "fedbed/transport.hpp"

namespace fedbed {

// Interleaving of in-flight messages from different senders. Per-sender
// FIFO is preserved under both policies.
enum class DeliveryPolicy { Fifo, SeededShuffle };

struct DeliverySchedule {
    std::uint64_t seed = 0;
    DeliveryPolicy policy = DeliveryPolicy::Fifo;
};

struct TranscriptEvent {
    enum class Kind { Sent, Delivered };
    Kind kind = Kind::Sent;
    int src = 0;
    int dst = 0;
    Envelope env;
    std::uint64_t stamp = 0; // global send counter value
};

bool operator==(const TranscriptEvent& a, const TranscriptEvent& b);

// In-process network for single-process runs. Node bodies execute under a
// cooperative scheduler that lets exactly one node run at a time and hands
// control over only at transport operations, so the whole run - including
// delivery order - is a deterministic function of the schedule seed.
// Timeouts are virtual: a recv fails only when no node can make progress.
//
// Transports may also be used directly from a single thread without
// runNode; recv on an empty inbox then times out immediately.
class SimNetwork {
public:
    explicit SimNetwork(int noNodes, DeliverySchedule schedule = {});
    ~SimNetwork();

    SimNetwork(const SimNetwork&) = delete;
    SimNetwork& operator=(const SimNetwork&) = delete;

    // Declares that a node will take part in the run. Nodes never expected
    // are unreachable: sends to them fail with ConnectError.
    void expectNode(int id);

    // Runs body as node id under the scheduler. Call once per node, each
    // from its own thread; bodies start only after every expected node
    // has arrived. Exceptions from body propagate to the caller.
    void runNode(int id, const std::function<void()>& body);

    // Factory handing out in-process transports keyed by cfg.nodeId.
    TransportFactory transportFactory();

    // Ordered record of every send and delivery. Take after the run.
    std::vector<TranscriptEvent> transcript() const;

    int noNodes() const { return noNodes_; }
    DeliverySchedule schedule() const { return schedule_; }

private:
    friend class SimTransport;

    struct Stamped {
        Envelope env;
        std::uint64_t stamp;
    };

    struct Slot {
        bool expected = false;
        bool arrived = false;
        bool begun = false;
        bool finished = false;
        bool open = false;
        bool closed = false;
        bool granted = false;
        bool waitingRecv = false;
        bool timedOut = false;
        std::map<int, std::deque<Stamped>> inflight; // keyed by sender
        std::condition_variable cv;
    };

    void openNode(int id);
    void closeNode(int id);
    void sendFrom(int id, int dst, const Envelope& e);
    Envelope recvAt(int id, std::chrono::milliseconds timeout);

    bool hasDeliverable(const Slot& s) const;
    Envelope takeDeliverable(int id);
    void scheduleNext(); // requires mu_ held and no granted node

    const int noNodes_;
    const DeliverySchedule schedule_;

    mutable std::mutex mu_;
    std::vector<std::unique_ptr<Slot>> slots_;
    std::mt19937_64 rng_;
    std::uint64_t sendCounter_ = 0;
    int expectedCount_ = 0;
    int arrivedCount_ = 0;
    bool started_ = false;
    std::vector<TranscriptEvent> transcript_;
};

} // namespace fedbed
