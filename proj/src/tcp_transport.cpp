#include "fedbed/tcp_transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <string>

namespace fedbed {

namespace {

std::string errnoText() { return std::strerror(errno); }

sockaddr_in loopbackAddr(int port) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<uint16_t>(port));
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    return addr;
}

// Reads exactly n bytes; false on EOF or error.
bool readFull(int fd, char* buf, size_t n) {
    size_t got = 0;
    while (got < n) {
        ssize_t r = ::read(fd, buf + got, n - got);
        if (r <= 0) return false;
        got += static_cast<size_t>(r);
    }
    return true;
}

bool writeFull(int fd, const char* buf, size_t n) {
    size_t put = 0;
    while (put < n) {
        ssize_t w = ::send(fd, buf + put, n - put, MSG_NOSIGNAL);
        if (w <= 0) {
            if (errno == EINTR) continue;
            return false;
        }
        put += static_cast<size_t>(w);
    }
    return true;
}

} // namespace

TcpTransport::TcpTransport(const NodeConfig& cfg) : Transport(cfg) {
    cfg.validate();

    listenFd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listenFd_ < 0) throw BindError("socket: " + errnoText());

    int one = 1;
    ::setsockopt(listenFd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);

    sockaddr_in addr = loopbackAddr(cfg.basePort + cfg.nodeId);
    if (::bind(listenFd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        std::string what = "cannot bind port " + std::to_string(cfg.basePort + cfg.nodeId) +
                           ": " + errnoText();
        ::close(listenFd_);
        listenFd_ = -1;
        throw BindError(what);
    }
    if (::listen(listenFd_, cfg.noNodes + 8) != 0) {
        std::string what = "listen: " + errnoText();
        ::close(listenFd_);
        listenFd_ = -1;
        throw BindError(what);
    }

    acceptThread_ = std::thread([this] { acceptLoop(); });
}

TcpTransport::~TcpTransport() {
    close();
}

void TcpTransport::acceptLoop() {
    for (;;) {
        int fd = ::accept(listenFd_, nullptr, nullptr);
        if (fd < 0) {
            if (errno == EINTR) continue;
            return; // listener shut down
        }
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        std::lock_guard lock(readersMu_);
        {
            std::lock_guard inboxLock(inboxMu_);
            if (closed_) {
                ::close(fd);
                return;
            }
        }
        acceptedFds_.push_back(fd);
        readers_.emplace_back([this, fd] { readerLoop(fd); });
    }
}

void TcpTransport::readerLoop(int fd) {
    for (;;) {
        char header[4];
        if (!readFull(fd, header, 4)) return;
        uint32_t n = (static_cast<uint32_t>(static_cast<unsigned char>(header[0])) << 24) |
                     (static_cast<uint32_t>(static_cast<unsigned char>(header[1])) << 16) |
                     (static_cast<uint32_t>(static_cast<unsigned char>(header[2])) << 8) |
                     static_cast<uint32_t>(static_cast<unsigned char>(header[3]));
        Envelope e;
        try {
            if (n > 0x7fffffff) throw FrameError("declared body length exceeds the frame size limit");
            std::string body(n, '\0');
            if (n > 0 && !readFull(fd, body.data(), n)) return; // peer went away mid-frame
            e = decodeBody(body, cfg_.noNodes);
        } catch (...) {
            std::lock_guard lock(inboxMu_);
            if (!readError_) readError_ = std::current_exception();
            inboxCv_.notify_all();
            return;
        }
        std::lock_guard lock(inboxMu_);
        if (closed_) return;
        inbox_.push_back(std::move(e));
        inboxCv_.notify_one();
    }
}

int TcpTransport::connectionFor(int dst) {
    auto it = peerFd_.find(dst);
    if (it != peerFd_.end()) return it->second;

    auto deadline = std::chrono::steady_clock::now() + cfg_.connectBudget;
    sockaddr_in addr = loopbackAddr(cfg_.basePort + dst);
    for (;;) {
        int fd = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd >= 0 && ::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0) {
            int one = 1;
            ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
            peerFd_[dst] = fd;
            return fd;
        }
        if (fd >= 0) ::close(fd);
        if (std::chrono::steady_clock::now() + cfg_.connectRetryInterval > deadline)
            throw ConnectError("peer " + std::to_string(dst) + " unreachable after retries", {dst});
        std::this_thread::sleep_for(cfg_.connectRetryInterval);
    }
}

void TcpTransport::send(int dst, const Envelope& e) {
    {
        std::lock_guard lock(inboxMu_);
        if (closed_) throw ClosedError("send on a closed transport");
    }
    if (dst == cfg_.nodeId) throw UsageError("cannot send to self");
    if (dst < 0 || dst >= cfg_.noNodes) throw UsageError("destination id out of range");
    std::string frame = encode(e); // validates the envelope as well

    std::lock_guard lock(sendMu_);
    int fd = connectionFor(dst);
    if (!writeFull(fd, frame.data(), frame.size())) {
        ::close(fd);
        peerFd_.erase(dst);
        throw ConnectError("lost connection to peer " + std::to_string(dst), {dst});
    }
}

Envelope TcpTransport::recv(std::chrono::milliseconds timeout) {
    std::unique_lock lock(inboxMu_);
    inboxCv_.wait_for(lock, timeout, [&] {
        return closed_ || !inbox_.empty() || readError_ != nullptr;
    });
    if (closed_) throw ClosedError("recv on a closed transport");
    if (!inbox_.empty()) {
        Envelope e = std::move(inbox_.front());
        inbox_.pop_front();
        return e;
    }
    if (readError_) {
        auto err = readError_;
        readError_ = nullptr;
        std::rethrow_exception(err);
    }
    throw TimeoutError("recv timed out after " + std::to_string(timeout.count()) + " ms");
}

void TcpTransport::close() {
    {
        std::lock_guard lock(inboxMu_);
        if (closed_) return;
        closed_ = true;
        inboxCv_.notify_all();
    }

    if (listenFd_ >= 0) ::shutdown(listenFd_, SHUT_RDWR);
    {
        std::lock_guard lock(readersMu_);
        for (int fd : acceptedFds_) ::shutdown(fd, SHUT_RDWR);
    }
    if (acceptThread_.joinable()) acceptThread_.join();

    // acceptLoop has exited; readers_ can no longer grow
    std::vector<std::thread> readers;
    std::vector<int> fds;
    {
        std::lock_guard lock(readersMu_);
        readers.swap(readers_);
        fds.swap(acceptedFds_);
    }
    for (auto& t : readers)
        if (t.joinable()) t.join();
    for (int fd : fds) ::close(fd);

    {
        std::lock_guard lock(sendMu_);
        for (auto& [dst, fd] : peerFd_) ::close(fd); // queued bytes still flush to live peers
        peerFd_.clear();
    }
    if (listenFd_ >= 0) {
        ::close(listenFd_);
        listenFd_ = -1;
    }
}

TransportFactory tcpTransportFactory() {
    return [](const NodeConfig& cfg) -> std::unique_ptr<Transport> {
        return std::make_unique<TcpTransport>(cfg);
    };
}

} // namespace fedbed
