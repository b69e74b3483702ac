#include "fedbed/sim_network.hpp"

#include <algorithm>
#include <string>

namespace fedbed {

namespace {

// Node id the current thread is running as, -1 outside runNode.
thread_local int tlsNodeId = -1;

} // namespace

bool operator==(const TranscriptEvent& a, const TranscriptEvent& b) {
    return a.kind == b.kind && a.src == b.src && a.dst == b.dst &&
           a.stamp == b.stamp && a.env == b.env;
}

class SimTransport final : public Transport {
public:
    SimTransport(NodeConfig cfg, SimNetwork* net) : Transport(std::move(cfg)), net_(net) {
        net_->openNode(cfg_.nodeId);
    }

    ~SimTransport() override { close(); }

    void send(int dst, const Envelope& e) override { net_->sendFrom(cfg_.nodeId, dst, e); }

    Envelope recv(std::chrono::milliseconds timeout) override {
        return net_->recvAt(cfg_.nodeId, timeout);
    }

    void close() override { net_->closeNode(cfg_.nodeId); }

private:
    SimNetwork* net_;
};

SimNetwork::SimNetwork(int noNodes, DeliverySchedule schedule)
    : noNodes_(noNodes), schedule_(schedule), rng_(schedule.seed) {
    if (noNodes < 1) throw ConfigError("noNodes must be positive");
    slots_.reserve(static_cast<size_t>(noNodes));
    for (int i = 0; i < noNodes; ++i) slots_.push_back(std::make_unique<Slot>());
}

SimNetwork::~SimNetwork() = default;

void SimNetwork::expectNode(int id) {
    std::lock_guard lock(mu_);
    if (id < 0 || id >= noNodes_) throw ConfigError("node id out of range");
    if (started_) throw UsageError("expectNode after the run started");
    Slot& s = *slots_[static_cast<size_t>(id)];
    if (!s.expected) {
        s.expected = true;
        ++expectedCount_;
    }
}

void SimNetwork::runNode(int id, const std::function<void()>& body) {
    {
        std::unique_lock lock(mu_);
        if (id < 0 || id >= noNodes_) throw ConfigError("node id out of range");
        Slot& s = *slots_[static_cast<size_t>(id)];
        if (!s.expected) throw UsageError("runNode for a node never expected");
        if (s.arrived) throw UsageError("runNode called twice for one node");
        s.arrived = true;
        ++arrivedCount_;
        if (arrivedCount_ == expectedCount_) {
            started_ = true;
            scheduleNext();
        }
        s.cv.wait(lock, [&] { return s.granted; });
        s.begun = true;
    }

    tlsNodeId = id;
    struct Guard {
        SimNetwork* net;
        int id;
        ~Guard() {
            tlsNodeId = -1;
            std::lock_guard lock(net->mu_);
            Slot& s = *net->slots_[static_cast<size_t>(id)];
            s.finished = true;
            s.granted = false;
            net->scheduleNext();
        }
    } guard{this, id};
    body();
}

TransportFactory SimNetwork::transportFactory() {
    return [this](const NodeConfig& cfg) -> std::unique_ptr<Transport> {
        cfg.validate();
        std::unique_ptr<Transport> t = std::make_unique<SimTransport>(cfg, this);
        return t;
    };
}

std::vector<TranscriptEvent> SimNetwork::transcript() const {
    std::lock_guard lock(mu_);
    return transcript_;
}

void SimNetwork::openNode(int id) {
    std::lock_guard lock(mu_);
    Slot& s = *slots_[static_cast<size_t>(id)];
    if (s.open && !s.closed) throw BindError("node " + std::to_string(id) + " is already open");
    s.open = true;
    s.closed = false;
    if (!s.expected) { // direct single-threaded use without expectNode
        s.expected = true;
        ++expectedCount_;
    }
}

void SimNetwork::closeNode(int id) {
    std::lock_guard lock(mu_);
    Slot& s = *slots_[static_cast<size_t>(id)];
    if (!s.open || s.closed) return;
    s.closed = true;
    s.cv.notify_all();
}

void SimNetwork::sendFrom(int id, int dst, const Envelope& e) {
    std::lock_guard lock(mu_);
    Slot& self = *slots_[static_cast<size_t>(id)];
    if (self.closed || !self.open) throw ClosedError("send on a closed transport");
    if (dst == id) throw UsageError("cannot send to self");
    if (dst < 0 || dst >= noNodes_) throw UsageError("destination id out of range");
    validateEnvelope(e, noNodes_);
    requireEncodable(e.data);
    Slot& peer = *slots_[static_cast<size_t>(dst)];
    if (!peer.expected || peer.closed)
        throw ConnectError("peer " + std::to_string(dst) + " unreachable", {dst});
    std::uint64_t stamp = sendCounter_++;
    peer.inflight[id].push_back({e, stamp});
    transcript_.push_back({TranscriptEvent::Kind::Sent, id, dst, e, stamp});
    peer.cv.notify_all(); // receivers outside the scheduler block on their cv

    if (tlsNodeId == -1 && started_) {
        // sender outside the scheduler: wake a waiter if the token is free
        bool anyGranted = false;
        for (const auto& slot : slots_)
            if (slot->granted) anyGranted = true;
        if (!anyGranted) scheduleNext();
    }
}

bool SimNetwork::hasDeliverable(const Slot& s) const {
    for (const auto& [src, q] : s.inflight)
        if (!q.empty()) return true;
    return false;
}

Envelope SimNetwork::takeDeliverable(int id) {
    Slot& s = *slots_[static_cast<size_t>(id)];
    std::vector<int> senders;
    for (const auto& [src, q] : s.inflight)
        if (!q.empty()) senders.push_back(src);
    int chosen;
    if (schedule_.policy == DeliveryPolicy::SeededShuffle && senders.size() > 1) {
        chosen = senders[static_cast<size_t>(rng_() % senders.size())];
    } else {
        // global arrival order: the queue head with the smallest stamp
        chosen = senders.front();
        std::uint64_t best = s.inflight[chosen].front().stamp;
        for (int src : senders) {
            std::uint64_t stamp = s.inflight[src].front().stamp;
            if (stamp < best) {
                best = stamp;
                chosen = src;
            }
        }
    }
    Stamped item = std::move(s.inflight[chosen].front());
    s.inflight[chosen].pop_front();
    transcript_.push_back({TranscriptEvent::Kind::Delivered, chosen, id, item.env, item.stamp});
    return std::move(item.env);
}

Envelope SimNetwork::recvAt(int id, std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    Slot& s = *slots_[static_cast<size_t>(id)];
    if (s.closed || !s.open) throw ClosedError("recv on a closed transport");

    if (tlsNodeId != id) {
        // direct use outside the scheduler: honor the caller's timeout
        if (!s.cv.wait_for(lock, timeout, [&] { return s.closed || hasDeliverable(s); }))
            throw TimeoutError("recv timed out: inbox empty");
        if (s.closed) throw ClosedError("recv on a closed transport");
        return takeDeliverable(id);
    }

    if (!hasDeliverable(s)) {
        s.waitingRecv = true;
        s.granted = false;
        scheduleNext();
        s.cv.wait(lock, [&] { return s.granted; });
        s.waitingRecv = false;
        if (s.timedOut) {
            s.timedOut = false;
            if (!hasDeliverable(s))
                throw TimeoutError("recv timed out: no node can make progress");
        }
    }
    return takeDeliverable(id);
}

void SimNetwork::scheduleNext() {
    if (!started_) return;

    std::vector<int> runnable;
    for (int id = 0; id < noNodes_; ++id) {
        const Slot& s = *slots_[static_cast<size_t>(id)];
        if (!s.arrived || s.finished || s.granted) continue;
        if (!s.begun || (s.waitingRecv && hasDeliverable(s)))
            runnable.push_back(id);
    }
    if (!runnable.empty()) {
        size_t pick = 0;
        if (schedule_.policy == DeliveryPolicy::SeededShuffle && runnable.size() > 1)
            pick = static_cast<size_t>(rng_() % runnable.size());
        Slot& s = *slots_[static_cast<size_t>(runnable[pick])];
        s.granted = true;
        s.cv.notify_one();
        return;
    }

    // Nobody can act. Wake the lowest-id waiter with a virtual timeout so
    // stalled runs fail deterministically instead of hanging.
    for (int id = 0; id < noNodes_; ++id) {
        Slot& s = *slots_[static_cast<size_t>(id)];
        if (s.arrived && !s.finished && s.waitingRecv) {
            s.timedOut = true;
            s.granted = true;
            s.cv.notify_one();
            return;
        }
    }
}

} // namespace fedbed
