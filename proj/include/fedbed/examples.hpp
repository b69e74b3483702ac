#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fedbed/node.hpp"
#include "fedbed/trace.hpp"

namespace fedbed::examples {

using TraceFn = std::function<void(const TraceRow&)>;

// A registered federated-learning program runnable by the launcher.
struct ExampleProgram {
    std::string name;
    int defaultIters = 1;
    bool emitsTrace = false;
    std::function<FLValue(Node& node, int noIters, const TraceFn& trace)> run;
};

// Library hook: user programs can register additional algorithms under
// their own names and launch them like the built-ins.
void registerExample(ExampleProgram program);
const ExampleProgram* findExample(std::string_view name);
std::vector<std::string> exampleNames();

// Callbacks of the threshold-counting program: the client answers 1.0 when
// its reading exceeds the received threshold, else 0.0; the server returns
// the fraction of positive answers.
CallbackPair thresholdCountCallbacks();

// Callbacks of the data-averaging programs: the client returns the mean of
// its single-element list and the received one; the server returns the
// mean of the first elements of all received lists.
CallbackPair pairAveragingCallbacks();

// Initial local data per program, derived from the node's config.
FLValue example1InitialData(const NodeConfig& cfg);
FLValue example23InitialData(const NodeConfig& cfg);

// Federated map: fraction of client readings above the server's threshold.
FLValue runExample1(Node& node, int noIters = 1, const TraceFn& trace = {});
// Centralized data averaging over [nodeId+1] initial values.
FLValue runExample2(Node& node, int noIters = 10, const TraceFn& trace = {});
// Decentralized data averaging over [nodeId+1] initial values.
FLValue runExample3(Node& node, int noIters = 10, const TraceFn& trace = {});

struct ConvergenceResult {
    double reference = 0.0; // mean of the final-iteration values
    std::optional<int> convergedIteration;
    double tolerance = 0.02;
};

// Finds the earliest iteration from which every node's value stays within
// tolerance of the reference value (the mean of the final-iteration
// values). Rows must form a complete trace with single-element numeric
// lists as values; TraceFormatError / TypeError otherwise.
ConvergenceResult convergencePoint(const TraceTable& trace, double tolerance = 0.02);

// One-line summary: converged_iteration=<k> reference=<r> tolerance=<t>
std::string convergenceSummary(const ConvergenceResult& r);

} // namespace fedbed::examples
