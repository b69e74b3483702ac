#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fedbed {

// Base class for every error raised by the framework.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// codec
class EncodeError : public Error { public: using Error::Error; };
class DecodeError : public Error { public: using Error::Error; };
class FrameError  : public Error { public: using Error::Error; };
class ProtocolError : public Error { public: using Error::Error; };

// transport
class BindError   : public Error { public: using Error::Error; };
class ConfigError : public Error { public: using Error::Error; };
class UsageError  : public Error { public: using Error::Error; };
class TimeoutError : public Error { public: using Error::Error; };
class ClosedError : public Error { public: using Error::Error; };

class ConnectError : public Error {
public:
    explicit ConnectError(const std::string& what, std::vector<int> peers = {})
        : Error(what), peers_(std::move(peers)) {}
    // Destination node ids the connection attempt failed for.
    const std::vector<int>& peers() const { return peers_; }

private:
    std::vector<int> peers_;
};

// runtime
class CallbackError : public Error { public: using Error::Error; };

class HandshakeTimeout : public Error {
public:
    HandshakeTimeout(const std::string& what, std::vector<int> missing)
        : Error(what), missing_(std::move(missing)) {}
    // Peers whose hello never arrived.
    const std::vector<int>& missingPeers() const { return missing_; }

private:
    std::vector<int> missing_;
};

// launcher
class LaunchError : public Error { public: using Error::Error; };
class TraceFormatError : public Error { public: using Error::Error; };

// convergence analysis
class TypeError : public Error { public: using Error::Error; };

} // namespace fedbed
