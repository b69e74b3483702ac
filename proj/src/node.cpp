#include "fedbed/node.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace fedbed {

namespace {

Envelope helloEnvelope(int src) {
    return Envelope{MsgType::Hello, 0, 0, src, FLValue()};
}

Envelope centralEnvelope(int iter, int src, FLValue data) {
    return Envelope{MsgType::CentralData, 0, iter, src, std::move(data)};
}

Envelope decentralEnvelope(int seq, int iter, int src, FLValue data) {
    return Envelope{MsgType::Decentral, seq, iter, src, std::move(data)};
}

} // namespace

Node::Node(const NodeConfig& cfg, const TransportFactory& makeTransport) : cfg_(cfg) {
    cfg_.validate();
    transport_ = makeTransport(cfg_);
    try {
        handshake();
    } catch (...) {
        transport_->close();
        throw;
    }
}

Node::~Node() {
    destroy();
}

void Node::destroy() {
    if (destroyed_) return;
    destroyed_ = true;
    if (transport_) transport_->close();
}

void Node::requireUsable() const {
    if (destroyed_) throw UsageError("node has been destroyed");
}

void Node::handshake() {
    const int n = cfg_.noNodes;
    auto deadline = std::chrono::steady_clock::now() + cfg_.recvTimeout;
    auto remaining = [&] {
        auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
            deadline - std::chrono::steady_clock::now());
        return std::max(left, std::chrono::milliseconds(0));
    };

    if (cfg_.nodeId == 0) {
        std::set<int> got;
        while (static_cast<int>(got.size()) < n - 1) {
            Envelope e;
            try {
                e = awaitEnvelope(0,
                                  [&](const Envelope& m) {
                                      return m.type == MsgType::Hello && !got.count(m.src);
                                  },
                                  remaining());
            } catch (const TimeoutError&) {
                std::vector<int> missing;
                std::ostringstream msg;
                msg << "handshake incomplete: missing hello from peer";
                for (int id = 1; id < n; ++id) {
                    if (!got.count(id)) missing.push_back(id);
                }
                if (missing.size() > 1) msg << 's';
                for (int id : missing) msg << ' ' << id;
                throw HandshakeTimeout(msg.str(), missing);
            }
            got.insert(e.src);
            ++stats_.hellosReceived;
        }
        transport_->broadcast(helloEnvelope(0));
        stats_.hellosSent += n - 1;
    } else {
        transport_->send(0, helloEnvelope(cfg_.nodeId));
        stats_.hellosSent = 1;
        try {
            awaitEnvelope(0, [](const Envelope& m) { return m.type == MsgType::Hello && m.src == 0; },
                          remaining());
        } catch (const TimeoutError&) {
            throw HandshakeTimeout("handshake incomplete: no hello broadcast from peer 0", {0});
        }
        stats_.hellosReceived = 1;
    }
}

Envelope Node::awaitEnvelope(int currentIter, const std::function<bool(const Envelope&)>& accept,
                             std::chrono::milliseconds timeout) {
    for (auto it = pending_.begin(); it != pending_.end(); ++it) {
        if (accept(*it)) {
            Envelope e = std::move(*it);
            pending_.erase(it);
            return e;
        }
    }
    for (;;) {
        Envelope e = transport_->recv(timeout);
        if (accept(e)) return e;
        if (e.iter > currentIter) {
            pending_.push_back(std::move(e)); // ahead of the processing point
            continue;
        }
        if (e.iter < currentIter)
            throw ProtocolError("envelope from past iteration " + std::to_string(e.iter) +
                                " while processing iteration " + std::to_string(currentIter));
        throw ProtocolError("unexpected " + std::string(msgTypeName(e.type)) + " (seq " +
                            std::to_string(e.seq) + ") from node " + std::to_string(e.src) +
                            " in iteration " + std::to_string(e.iter));
    }
}

FLValue Node::callServer(const CallbackPair& cb, const FLValue& pdata,
                         const std::vector<FLValue>& msgs) {
    FLValue out;
    try {
        out = cb.sfun(pdata, msgs);
    } catch (const std::exception& e) {
        throw CallbackError(std::string("server callback failed: ") + e.what());
    }
    try {
        requireEncodable(out);
    } catch (const EncodeError& e) {
        throw CallbackError(std::string("server callback returned a non-encodable value: ") + e.what());
    }
    return out;
}

FLValue Node::callClient(const CallbackPair& cb, const FLValue& ldata, const FLValue& pdata,
                         const FLValue& msg) {
    FLValue out;
    try {
        out = cb.cfun(ldata, pdata, msg);
    } catch (const std::exception& e) {
        throw CallbackError(std::string("client callback failed: ") + e.what());
    }
    try {
        requireEncodable(out);
    } catch (const EncodeError& e) {
        throw CallbackError(std::string("client callback returned a non-encodable value: ") + e.what());
    }
    return out;
}

FLValue Node::flCentralized(const CallbackPair& cb, FLValue ldata, FLValue pdata, int noIters) {
    requireUsable();
    if (noIters < 1) throw UsageError("noIters must be at least 1");
    if (!cb.sfun || !cb.cfun) throw UsageError("both callbacks must be set");

    const int n = cfg_.noNodes;
    const bool isServer = cfg_.nodeId == cfg_.flSrvId;
    FLValue localData = std::move(ldata);

    for (int iter = 1; iter <= noIters; ++iter) {
        int sent = 0;
        int processed = 0;
        if (isServer) {
            transport_->broadcast(centralEnvelope(iter, cfg_.nodeId, localData));
            sent += n - 1;

            std::map<int, FLValue> updates;
            while (static_cast<int>(updates.size()) < n - 1) {
                Envelope e = awaitEnvelope(
                    iter,
                    [&](const Envelope& m) {
                        return m.type == MsgType::CentralData && m.iter == iter &&
                               m.src != cfg_.nodeId && !updates.count(m.src);
                    },
                    cfg_.recvTimeout);
                updates.emplace(e.src, std::move(e.data));
                ++processed;
            }
            std::vector<FLValue> msgs;
            msgs.reserve(updates.size());
            for (auto& [src, data] : updates) msgs.push_back(std::move(data));
            localData = callServer(cb, pdata, msgs);
        } else {
            Envelope fromServer = awaitEnvelope(
                iter,
                [&](const Envelope& m) {
                    return m.type == MsgType::CentralData && m.iter == iter && m.src == cfg_.flSrvId;
                },
                cfg_.recvTimeout);
            ++processed;
            localData = callClient(cb, localData, pdata, fromServer.data);
            transport_->send(cfg_.flSrvId, centralEnvelope(iter, cfg_.nodeId, localData));
            ++sent;
        }
        stats_.sentPerIteration.push_back(sent);
        stats_.processedPerIteration.push_back(processed);
        if (observer_) observer_(iter, localData);
    }
    return localData;
}

FLValue Node::flDecentralized(const CallbackPair& cb, FLValue ldata, FLValue pdata, int noIters) {
    requireUsable();
    if (noIters < 1) throw UsageError("noIters must be at least 1");
    if (!cb.sfun || !cb.cfun) throw UsageError("both callbacks must be set");

    const int n = cfg_.noNodes;
    FLValue localData = std::move(ldata);

    for (int iter = 1; iter <= noIters; ++iter) {
        int sent = 0;
        transport_->broadcast(decentralEnvelope(1, iter, cfg_.nodeId, localData));
        sent += n - 1;

        // Phase 2: consume all 2(n-1) envelopes of this iteration. A seq-1
        // message gets an immediate seq-2 reply computed from our local
        // data, which itself stays untouched until phase 3.
        std::set<int> phase1Seen;
        std::map<int, FLValue> replies;
        int processed = 0;
        while (processed < 2 * (n - 1)) {
            Envelope e = awaitEnvelope(
                iter,
                [&](const Envelope& m) { return m.type == MsgType::Decentral && m.iter == iter; },
                cfg_.recvTimeout);
            if (e.seq == 1) {
                if (!phase1Seen.insert(e.src).second)
                    throw ProtocolError("duplicate phase-1 message from node " +
                                        std::to_string(e.src));
                FLValue reply = callClient(cb, localData, pdata, e.data);
                transport_->send(e.src, decentralEnvelope(2, iter, cfg_.nodeId, std::move(reply)));
                ++sent;
            } else {
                if (replies.count(e.src))
                    throw ProtocolError("duplicate phase-2 reply from node " + std::to_string(e.src));
                replies.emplace(e.src, std::move(e.data));
            }
            ++processed;
        }

        std::vector<FLValue> msgs;
        msgs.reserve(replies.size());
        for (auto& [src, data] : replies) msgs.push_back(std::move(data));
        localData = callServer(cb, pdata, msgs);

        stats_.sentPerIteration.push_back(sent);
        stats_.processedPerIteration.push_back(processed);
        if (observer_) observer_(iter, localData);
    }
    return localData;
}

} // namespace fedbed
