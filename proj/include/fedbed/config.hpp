#pragma once

#include <chrono>

#include "fedbed/errors.hpp"

namespace fedbed {

constexpr int kDefaultBasePort = 16000;

// Identity and topology of one node. A node listens on basePort + nodeId.
struct NodeConfig {
    int noNodes = 0;
    int nodeId = 0;
    int flSrvId = 0;
    int basePort = kDefaultBasePort;
    std::chrono::milliseconds recvTimeout{30'000};
    std::chrono::milliseconds connectRetryInterval{100};
    std::chrono::milliseconds connectBudget{30'000};

    void validate() const {
        if (noNodes < 2)
            throw ConfigError("noNodes must be at least 2");
        if (nodeId < 0 || nodeId >= noNodes)
            throw ConfigError("nodeId out of range");
        if (flSrvId < 0 || flSrvId >= noNodes)
            throw ConfigError("flSrvId out of range");
        if (basePort < 1024 || basePort > 65535)
            throw ConfigError("basePort must lie in [1024, 65535]");
        if (basePort + noNodes - 1 > 65535)
            throw ConfigError("basePort + noNodes - 1 exceeds 65535");
        if (recvTimeout.count() <= 0)
            throw ConfigError("recvTimeout must be positive");
    }
};

} // namespace fedbed
