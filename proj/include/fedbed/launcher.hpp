#pragma once

#include <chrono>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fedbed/examples.hpp"
#include "fedbed/sim_network.hpp"

namespace fedbed {

enum class TransportKind { Tcp, Sim };

// Configuration of one launch: which program, how many nodes, which
// transport, where traces go.
struct LaunchSpec {
    int noNodes = 0;
    std::string exampleName;  // one of the registered examples ...
    std::string programPath;  // ... or a user program obeying the node argv contract
    int flSrvId = 0;
    int basePort = kDefaultBasePort;
    std::optional<int> noIters; // override the example's default
    TransportKind transport = TransportKind::Tcp;
    std::uint64_t seed = 0;
    DeliveryPolicy simPolicy = DeliveryPolicy::SeededShuffle;
    std::string traceDir = ".";
    std::chrono::seconds nodeTimeout{30};
    bool verbose = false;
    std::vector<int> absentNodes; // fault injection: skip starting these nodes
    std::string selfExe;          // binary providing the run-node mode (example runs over tcp)
};

struct NodeReport {
    int nodeId = 0;
    int exitCode = -1;
    std::optional<FLValue> finalData;
    std::string errorText;
    std::vector<std::string> output; // captured, id-prefixed child output
};

struct RunReport {
    std::vector<NodeReport> nodes;
    TraceTable mergedTrace;
    double durationSec = 0.0;
    std::optional<examples::ConvergenceResult> convergence;

    bool ok() const;
};

// Starts one node process per id (or, for the sim transport, runs every
// node in this process under the seeded scheduler), waits for all of them
// and aggregates results and traces. Throws LaunchError on an invalid
// spec or a spawn failure; per-node failures are reported, not thrown.
RunReport launch(const LaunchSpec& spec);

// Reads and merges per-node trace files into one table sorted by
// (iter, nodeId). TraceFormatError names the offending file and line.
TraceTable mergeTraces(const std::vector<std::string>& files);

void printRunReport(const RunReport& report, std::ostream& out);

// Arguments of the per-node process contract:
// <program> <nodeId> <noNodes> <flSrvId> <basePort>
//           [--transport tcp|sim] [--seed S] [--trace FILE]
struct RunNodeArgs {
    int nodeId = 0;
    int noNodes = 0;
    int flSrvId = 0;
    int basePort = kDefaultBasePort;
    std::string transport = "tcp";
    std::uint64_t seed = 0;
    std::string tracePath;
    std::string exampleName;
    std::optional<int> noIters;
    std::chrono::seconds recvTimeout{30};
};

// Body of the run-node mode: runs the named example as one node over the
// socket transport, prints "RESULT <canonical>" on success. Returns the
// process exit code.
int runNodeMain(const RunNodeArgs& args);

} // namespace fedbed
