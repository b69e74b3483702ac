#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "fedbed/examples.hpp"
#include "support/cluster.hpp"

using namespace fedbed;
namespace ex = fedbed::examples;

namespace {

double first(const FLValue& v) { return v.at(0).get<double>(); }

cluster::Outcome runExample(const char* name, int n, int iters, int srvId = 0,
                            fedbed::DeliverySchedule sched = {}) {
    const auto* prog = ex::findExample(name);
    REQUIRE(prog != nullptr);
    return cluster::runSim(
        n,
        [&](Node& node) {
            return prog->run(node, iters, {});
        },
        sched, srvId);
}

// Client series of the centralized averaging run, from the closed-form
// recurrence x <- (x + r)/2: x_k = r -/+ d * 2^(1-k). Independent of the
// protocol implementation.
TraceTable closedFormCentralTrace(int iters) {
    TraceTable t;
    for (int k = 1; k <= iters; ++k) {
        double delta = 0.25 * std::pow(2.0, 1 - k);
        t.push_back({k, 0, FLValue::array({1.75})});
        t.push_back({k, 1, FLValue::array({1.75 - delta})});
        t.push_back({k, 2, FLValue::array({1.75 + delta})});
    }
    return t;
}

} // namespace

TEST_SUITE("examples") {

TEST_CASE("threshold callbacks follow the reading/threshold rule") {
    auto cb = ex::thresholdCountCallbacks();
    CHECK(cb.cfun(FLValue(68.0), FLValue(), FLValue(69.5)) == FLValue(0.0));
    CHECK(cb.cfun(FLValue(70.5), FLValue(), FLValue(69.5)) == FLValue(1.0));
    CHECK(cb.cfun(FLValue(69.5), FLValue(), FLValue(69.5)) == FLValue(0.0)); // strict >
    CHECK(cb.sfun(FLValue(), {FLValue(0.0), FLValue(1.0)}) == FLValue(0.5));
}

TEST_CASE("averaging callbacks") {
    auto cb = ex::pairAveragingCallbacks();
    CHECK(first(cb.cfun(FLValue::array({2}), FLValue(), FLValue::array({1}))) == 1.5);
    CHECK(first(cb.sfun(FLValue(), {FLValue::array({1.5}), FLValue::array({2.0})})) == 1.75);
    CHECK(first(cb.sfun(FLValue(), {FLValue::array({3.0})})) == 3.0);
}

TEST_CASE("example1 initial data layout") {
    auto cfg = cluster::configFor(3, 0, 0, kDefaultBasePort);
    CHECK(ex::example1InitialData(cfg) == FLValue(69.5));
    cfg.nodeId = 1;
    CHECK(ex::example1InitialData(cfg) == FLValue(68.0));
    cfg.nodeId = 2;
    CHECK(ex::example1InitialData(cfg) == FLValue(70.5));
}

TEST_CASE("example1: fraction of readings above the threshold") {
    auto out3 = runExample("example1", 3, 1);
    REQUIRE(out3.allOk());
    CHECK(*out3.nodes[0].result == FLValue(0.5));
    CHECK(*out3.nodes[1].result == FLValue(0.0));
    CHECK(*out3.nodes[2].result == FLValue(1.0));

    auto out5 = runExample("example1", 5, 1);
    REQUIRE(out5.allOk());
    CHECK(*out5.nodes[0].result == FLValue(0.25));

    // when the server is the last node, no client reads above threshold
    auto shifted = runExample("example1", 3, 1, 2);
    REQUIRE(shifted.allOk());
    CHECK(*shifted.nodes[2].result == FLValue(0.0));
}

TEST_CASE("example2: convergence point and reference match the recurrence") {
    auto out = runExample("example2", 3, 10);
    REQUIRE(out.allOk());

    TraceTable merged;
    for (const auto& n : out.nodes)
        merged.insert(merged.end(), n.trace.begin(), n.trace.end());
    sortTrace(merged);

    // the run reproduces the closed form exactly
    TraceTable expected = closedFormCentralTrace(10);
    sortTrace(expected);
    REQUIRE(merged.size() == expected.size());
    for (size_t i = 0; i < merged.size(); ++i) {
        CAPTURE(i);
        REQUIRE(merged[i].iter == expected[i].iter);
        REQUIRE(merged[i].nodeId == expected[i].nodeId);
        REQUIRE(strictEqual(merged[i].value, expected[i].value));
    }

    auto conv = ex::convergencePoint(merged);
    CHECK(conv.reference == 1.75);
    REQUIRE(conv.convergedIteration.has_value());
    CHECK(*conv.convergedIteration == 5);

    // clients close in on the mean from one side with shrinking deviation
    double prev1 = 0, prev2 = 0;
    for (int k = 1; k <= 10; ++k) {
        double v1 = first(merged[static_cast<size_t>(3 * (k - 1) + 1)].value);
        double v2 = first(merged[static_cast<size_t>(3 * (k - 1) + 2)].value);
        CHECK(v1 < 1.75);
        CHECK(v2 > 1.75);
        if (k > 1) {
            CHECK(1.75 - v1 < prev1);
            CHECK(v2 - 1.75 < prev2);
        }
        prev1 = 1.75 - v1;
        prev2 = v2 - 1.75;
    }
}

TEST_CASE("example3: convergence point and the unweighted mean") {
    auto out = runExample("example3", 3, 10);
    REQUIRE(out.allOk());

    TraceTable merged;
    for (const auto& n : out.nodes)
        merged.insert(merged.end(), n.trace.begin(), n.trace.end());
    sortTrace(merged);

    auto conv = ex::convergencePoint(merged);
    CHECK(conv.reference == 2.0); // simple mean of 1, 2, 3
    REQUIRE(conv.convergedIteration.has_value());
    CHECK(*conv.convergedIteration == 3);

    // iteration-1 values
    CHECK(first(merged[0].value) == 1.75);
    CHECK(first(merged[1].value) == 2.0);
    CHECK(first(merged[2].value) == 2.25);

    // the decentralized run converges in strictly fewer iterations than the
    // centralized one, and to the unweighted rather than the biased mean
    auto central = runExample("example2", 3, 10);
    REQUIRE(central.allOk());
    TraceTable centralMerged;
    for (const auto& n : central.nodes)
        centralMerged.insert(centralMerged.end(), n.trace.begin(), n.trace.end());
    auto convCentral = ex::convergencePoint(centralMerged);
    CHECK(convCentral.reference == 1.75);
    CHECK(*conv.convergedIteration < *convCentral.convergedIteration);
}

TEST_CASE("two-node degenerate runs") {
    auto c = runExample("example2", 2, 1);
    REQUIRE(c.allOk());
    CHECK(first(*c.nodes[0].result) == 1.5);
    CHECK(first(*c.nodes[1].result) == 1.5);

    auto d = runExample("example3", 2, 1);
    REQUIRE(d.allOk());
    CHECK(first(*d.nodes[0].result) == 1.5);
    CHECK(first(*d.nodes[1].result) == 1.5);
}

TEST_CASE("convergencePoint analyses") {
    SUBCASE("constant trace converges at iteration 1") {
        TraceTable t;
        for (int k = 1; k <= 4; ++k)
            for (int id = 0; id < 3; ++id) t.push_back({k, id, FLValue::array({5.0})});
        auto conv = ex::convergencePoint(t);
        CHECK(conv.reference == 5.0);
        CHECK(*conv.convergedIteration == 1);
    }

    SUBCASE("closed-form central trace converges at 5") {
        auto conv = ex::convergencePoint(closedFormCentralTrace(10));
        CHECK(conv.reference == 1.75);
        CHECK(*conv.convergedIteration == 5);
    }

    SUBCASE("the tolerance comparison is strict") {
        TraceTable t;
        t.push_back({1, 0, FLValue::array({1.0 - 0.02})});
        t.push_back({1, 1, FLValue::array({1.0 + 0.02})});
        t.push_back({2, 0, FLValue::array({1.0})});
        t.push_back({2, 1, FLValue::array({1.0})});
        auto conv = ex::convergencePoint(t);
        CHECK(conv.reference == 1.0);
        CHECK(*conv.convergedIteration == 2); // |0.02| < 0.02 is false
    }

    SUBCASE("a trace that never settles reports none") {
        TraceTable t;
        t.push_back({1, 0, FLValue::array({0.0})});
        t.push_back({1, 1, FLValue::array({4.0})});
        auto conv = ex::convergencePoint(t);
        CHECK_FALSE(conv.convergedIteration.has_value());
    }

    SUBCASE("incomplete traces are rejected") {
        TraceTable missingRow;
        missingRow.push_back({1, 0, FLValue::array({1.0})});
        missingRow.push_back({1, 1, FLValue::array({1.0})});
        missingRow.push_back({2, 0, FLValue::array({1.0})});
        CHECK_THROWS_AS(ex::convergencePoint(missingRow), TraceFormatError);

        TraceTable gap;
        gap.push_back({1, 0, FLValue::array({1.0})});
        gap.push_back({3, 0, FLValue::array({1.0})});
        CHECK_THROWS_AS(ex::convergencePoint(gap), TraceFormatError);

        CHECK_THROWS_AS(ex::convergencePoint({}), TraceFormatError);
    }

    SUBCASE("non-numeric values are a type error") {
        TraceTable t;
        t.push_back({1, 0, FLValue::array({FLValue("x")})});
        CHECK_THROWS_AS(ex::convergencePoint(t), TypeError);
        TraceTable scalar;
        scalar.push_back({1, 0, FLValue(1.0)});
        CHECK_THROWS_AS(ex::convergencePoint(scalar), TypeError);
    }
}

TEST_CASE("convergence summary line format") {
    ex::ConvergenceResult r;
    r.reference = 1.75;
    r.convergedIteration = 5;
    r.tolerance = 0.02;
    CHECK(ex::convergenceSummary(r) == "converged_iteration=5 reference=1.75 tolerance=0.02");
    r.convergedIteration.reset();
    CHECK(ex::convergenceSummary(r) == "converged_iteration=none reference=1.75 tolerance=0.02");
}

TEST_CASE("trace files round-trip through the csv format") {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / ("fedbed_trace_test_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    auto path = (dir / "t.csv").string();

    TraceTable rows;
    rows.push_back({1, 0, FLValue::array({1.75})});
    rows.push_back({1, 1, FLValue::array({1.5, 2.0})});            // comma forces quoting
    rows.push_back({2, 0, FLValue("say \"hi\"")});                 // embedded quotes
    {
        TraceWriter w(path);
        for (const auto& r : rows) w.append(r);
    }
    TraceTable back = readTraceFile(path);
    REQUIRE(back.size() == rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
        CHECK(back[i].iter == rows[i].iter);
        CHECK(back[i].nodeId == rows[i].nodeId);
        CHECK(strictEqual(back[i].value, rows[i].value));
    }

    SUBCASE("bad header") {
        std::ofstream bad(dir / "bad.csv");
        bad << "iteration,node,value\n";
        bad.close();
        CHECK_THROWS_AS(readTraceFile((dir / "bad.csv").string()), TraceFormatError);
    }
    SUBCASE("non-numeric iter names file and line") {
        std::ofstream bad(dir / "bad2.csv");
        bad << kTraceHeader << "\n" << "x,0,[1.0]\n";
        bad.close();
        try {
            readTraceFile((dir / "bad2.csv").string());
            FAIL("expected TraceFormatError");
        } catch (const TraceFormatError& e) {
            std::string what = e.what();
            CHECK(what.find("bad2.csv:2") != std::string::npos);
        }
    }
    fs::remove_all(dir);
}

TEST_CASE("example registry") {
    auto names = ex::exampleNames();
    CHECK(std::find(names.begin(), names.end(), "example1") != names.end());
    CHECK(std::find(names.begin(), names.end(), "example3") != names.end());
    CHECK(ex::findExample("example9") == nullptr);
    CHECK(ex::findExample("example2")->defaultIters == 10);
    CHECK_FALSE(ex::findExample("example1")->emitsTrace);

    // the registration hook accepts user programs
    ex::registerExample({"toy", 1, false, [](Node&, int, const ex::TraceFn&) {
                             return FLValue("toy");
                         }});
    CHECK(ex::findExample("toy") != nullptr);
}

} // TEST_SUITE
