#include "fedbed/examples.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <set>

namespace fedbed::examples {

namespace {

std::mutex registryMu;
std::map<std::string, ExampleProgram, std::less<>>& registry() {
    static std::map<std::string, ExampleProgram, std::less<>> programs;
    return programs;
}

void registerBuiltins();

std::once_flag builtinsOnce;
void ensureBuiltins() {
    std::call_once(builtinsOnce, registerBuiltins);
}

IterationObserver traceObserver(const NodeConfig& cfg, const TraceFn& trace) {
    if (!trace) return {};
    int nodeId = cfg.nodeId;
    return [nodeId, trace](int iter, const FLValue& value) {
        trace(TraceRow{iter, nodeId, value});
    };
}

void registerBuiltins() {
    std::lock_guard lock(registryMu);
    registry().emplace("example1", ExampleProgram{"example1", 1, false,
                                                  [](Node& node, int noIters, const TraceFn& trace) {
                                                      return runExample1(node, noIters, trace);
                                                  }});
    registry().emplace("example2", ExampleProgram{"example2", 10, true,
                                                  [](Node& node, int noIters, const TraceFn& trace) {
                                                      return runExample2(node, noIters, trace);
                                                  }});
    registry().emplace("example3", ExampleProgram{"example3", 10, true,
                                                  [](Node& node, int noIters, const TraceFn& trace) {
                                                      return runExample3(node, noIters, trace);
                                                  }});
}

} // namespace

void registerExample(ExampleProgram program) {
    ensureBuiltins();
    std::lock_guard lock(registryMu);
    std::string name = program.name;
    registry().insert_or_assign(std::move(name), std::move(program));
}

const ExampleProgram* findExample(std::string_view name) {
    ensureBuiltins();
    std::lock_guard lock(registryMu);
    auto it = registry().find(name);
    return it == registry().end() ? nullptr : &it->second;
}

std::vector<std::string> exampleNames() {
    ensureBuiltins();
    std::lock_guard lock(registryMu);
    std::vector<std::string> names;
    for (const auto& [name, prog] : registry()) names.push_back(name);
    return names;
}

CallbackPair thresholdCountCallbacks() {
    CallbackPair cb;
    cb.cfun = [](const FLValue& localData, const FLValue&, const FLValue& msg) {
        double clientReading = localData.get<double>();
        double threshold = msg.get<double>();
        return FLValue(clientReading > threshold ? 1.0 : 0.0);
    };
    cb.sfun = [](const FLValue&, const std::vector<FLValue>& msgs) {
        double sum = 0.0;
        for (const auto& m : msgs) sum += m.get<double>();
        return FLValue(sum / static_cast<double>(msgs.size()));
    };
    return cb;
}

CallbackPair pairAveragingCallbacks() {
    CallbackPair cb;
    cb.cfun = [](const FLValue& localData, const FLValue&, const FLValue& msg) {
        double avg = (localData.at(0).get<double>() + msg.at(0).get<double>()) / 2.0;
        return FLValue::array({avg});
    };
    cb.sfun = [](const FLValue&, const std::vector<FLValue>& msgs) {
        double tmp = 0.0;
        for (const auto& lst : msgs) tmp += lst.at(0).get<double>();
        tmp /= static_cast<double>(msgs.size());
        return FLValue::array({tmp});
    };
    return cb;
}

FLValue example1InitialData(const NodeConfig& cfg) {
    if (cfg.nodeId == cfg.flSrvId) return FLValue(69.5); // the threshold
    if (cfg.nodeId == cfg.noNodes - 1) return FLValue(70.5);
    return FLValue(68.0);
}

FLValue example23InitialData(const NodeConfig& cfg) {
    return FLValue::array({cfg.nodeId + 1});
}

FLValue runExample1(Node& node, int noIters, const TraceFn& trace) {
    if (trace) node.setIterationObserver(traceObserver(node.config(), trace));
    return node.flCentralized(thresholdCountCallbacks(), example1InitialData(node.config()),
                              FLValue(), noIters);
}

FLValue runExample2(Node& node, int noIters, const TraceFn& trace) {
    if (trace) node.setIterationObserver(traceObserver(node.config(), trace));
    return node.flCentralized(pairAveragingCallbacks(), example23InitialData(node.config()),
                              FLValue(), noIters);
}

FLValue runExample3(Node& node, int noIters, const TraceFn& trace) {
    if (trace) node.setIterationObserver(traceObserver(node.config(), trace));
    return node.flDecentralized(pairAveragingCallbacks(), example23InitialData(node.config()),
                                FLValue(), noIters);
}

ConvergenceResult convergencePoint(const TraceTable& trace, double tolerance) {
    if (trace.empty()) throw TraceFormatError("empty trace");

    // Group by iteration and check completeness: iterations 1..K contiguous
    // with the same node set throughout.
    std::map<int, std::map<int, const TraceRow*>> byIter;
    for (const auto& row : trace) {
        if (!byIter[row.iter].emplace(row.nodeId, &row).second)
            throw TraceFormatError("duplicate row for iteration " + std::to_string(row.iter) +
                                   ", node " + std::to_string(row.nodeId));
    }
    int maxIter = byIter.rbegin()->first;
    if (byIter.begin()->first != 1 || static_cast<int>(byIter.size()) != maxIter)
        throw TraceFormatError("iterations are not contiguous from 1");
    std::set<int> nodeSet;
    for (const auto& [nodeId, row] : byIter.at(1)) nodeSet.insert(nodeId);
    for (const auto& [iter, rows] : byIter) {
        if (rows.size() != nodeSet.size())
            throw TraceFormatError("iteration " + std::to_string(iter) +
                                   " has a different node count");
        for (const auto& [nodeId, row] : rows)
            if (!nodeSet.count(nodeId))
                throw TraceFormatError("iteration " + std::to_string(iter) +
                                       " has a different node set");
    }

    auto element = [](const TraceRow& row) {
        const FLValue& v = row.value;
        if (!v.is_array() || v.size() != 1 || !v.at(0).is_number())
            throw TypeError("trace value is not a single-element numeric list (iteration " +
                            std::to_string(row.iter) + ", node " + std::to_string(row.nodeId) + ")");
        return v.at(0).get<double>();
    };

    ConvergenceResult result;
    result.tolerance = tolerance;
    double sum = 0.0;
    for (const auto& [nodeId, row] : byIter.at(maxIter)) sum += element(*row);
    result.reference = sum / static_cast<double>(nodeSet.size());

    auto iterationWithin = [&](int iter) {
        for (const auto& [nodeId, row] : byIter.at(iter))
            if (!(std::fabs(element(*row) - result.reference) < tolerance)) return false;
        return true;
    };

    std::optional<int> converged;
    for (int iter = maxIter; iter >= 1 && iterationWithin(iter); --iter) converged = iter;
    result.convergedIteration = converged;
    return result;
}

std::string convergenceSummary(const ConvergenceResult& r) {
    std::string out = "converged_iteration=";
    out += r.convergedIteration ? std::to_string(*r.convergedIteration) : "none";
    out += " reference=";
    out += canonicalText(FLValue(r.reference));
    out += " tolerance=";
    out += canonicalText(FLValue(r.tolerance));
    return out;
}

} // namespace fedbed::examples
