#include "fedbed/transport.hpp"

#include <sstream>

namespace fedbed {

void Transport::broadcast(const Envelope& e) {
    std::vector<int> failed;
    std::string detail;
    for (int dst = 0; dst < cfg_.noNodes; ++dst) {
        if (dst == cfg_.nodeId) continue;
        try {
            send(dst, e);
        } catch (const ConnectError& err) {
            failed.push_back(dst);
            if (!detail.empty()) detail += "; ";
            detail += err.what();
        }
    }
    if (!failed.empty()) {
        std::ostringstream msg;
        msg << "broadcast failed for peer";
        if (failed.size() > 1) msg << 's';
        for (int id : failed) msg << ' ' << id;
        msg << " (" << detail << ")";
        throw ConnectError(msg.str(), failed);
    }
}

} // namespace fedbed
