#include "fedbed/launcher.hpp"

#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "fedbed/tcp_transport.hpp"

namespace fedbed {

namespace fs = std::filesystem;

namespace {

constexpr std::chrono::seconds kKillGrace{10};

std::string tracePathFor(const LaunchSpec& spec, int nodeId) {
    return (fs::path(spec.traceDir) / ("trace_" + std::to_string(nodeId) + ".csv")).string();
}

const examples::ExampleProgram* requireExample(const std::string& name) {
    const auto* prog = examples::findExample(name);
    if (!prog) throw LaunchError("unknown example \"" + name + "\"");
    return prog;
}

void validateSpec(const LaunchSpec& spec) {
    if (spec.noNodes < 2) throw LaunchError("noNodes must be at least 2");
    if (spec.exampleName.empty() == spec.programPath.empty())
        throw LaunchError("exactly one of example name or program path must be given");
    if (!spec.exampleName.empty()) requireExample(spec.exampleName);
    if (!spec.programPath.empty() && spec.transport == TransportKind::Sim)
        throw LaunchError("the sim transport runs registered examples only");
    if (!spec.programPath.empty() && !fs::exists(spec.programPath))
        throw LaunchError("program not found: " + spec.programPath);
    if (spec.noIters && *spec.noIters < 1) throw LaunchError("iters must be at least 1");
    if (spec.nodeTimeout.count() <= 0) throw LaunchError("timeout must be positive");
    for (int id : spec.absentNodes)
        if (id < 0 || id >= spec.noNodes) throw LaunchError("absent node id out of range");

    NodeConfig probe;
    probe.noNodes = spec.noNodes;
    probe.nodeId = 0;
    probe.flSrvId = spec.flSrvId;
    probe.basePort = spec.basePort;
    try {
        probe.validate();
    } catch (const ConfigError& e) {
        throw LaunchError(e.what());
    }

    std::error_code ec;
    fs::create_directories(spec.traceDir, ec);
    if (ec || !fs::is_directory(spec.traceDir))
        throw LaunchError("trace directory not writable: " + spec.traceDir);
}

NodeConfig nodeConfigFor(const LaunchSpec& spec, int nodeId) {
    NodeConfig cfg;
    cfg.noNodes = spec.noNodes;
    cfg.nodeId = nodeId;
    cfg.flSrvId = spec.flSrvId;
    cfg.basePort = spec.basePort;
    cfg.recvTimeout = std::chrono::duration_cast<std::chrono::milliseconds>(spec.nodeTimeout);
    return cfg;
}

int effectiveIters(const LaunchSpec& spec) {
    if (spec.noIters) return *spec.noIters;
    if (!spec.exampleName.empty()) return requireExample(spec.exampleName)->defaultIters;
    return 1;
}

bool exampleEmitsTrace(const LaunchSpec& spec) {
    return !spec.exampleName.empty() && requireExample(spec.exampleName)->emitsTrace;
}

// ---------------------------------------------------------------- children

struct ChildProc {
    int nodeId = -1;
    pid_t pid = -1;
    int outFd = -1;
    int errFd = -1;
    std::string outBuf, errBuf;
    std::vector<std::string> resultLines;
    std::string lastErrorLine;
    NodeReport report;
    bool exited = false;
};

void consumeLines(ChildProc& child, std::string& buf, bool isErr, bool verbose) {
    size_t pos;
    while ((pos = buf.find('\n')) != std::string::npos) {
        std::string line = buf.substr(0, pos);
        buf.erase(0, pos + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string prefixed = "[node " + std::to_string(child.nodeId) + "] " + line;
        child.report.output.push_back(prefixed);
        if (verbose) (isErr ? std::cerr : std::cout) << prefixed << "\n";
        if (!isErr && line.rfind("RESULT ", 0) == 0) child.resultLines.push_back(line.substr(7));
        if (isErr && !line.empty())
            child.lastErrorLine = line.rfind("ERROR ", 0) == 0 ? line.substr(6) : line;
    }
}

void drainFd(ChildProc& child, int& fd, std::string& buf, bool isErr, bool verbose) {
    char chunk[4096];
    for (;;) {
        ssize_t r = ::read(fd, chunk, sizeof chunk);
        if (r > 0) {
            buf.append(chunk, static_cast<size_t>(r));
            consumeLines(child, buf, isErr, verbose);
            continue;
        }
        if (r < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) return;
        // EOF or error: flush whatever is left as a final line
        if (!buf.empty()) {
            buf += '\n';
            consumeLines(child, buf, isErr, verbose);
        }
        ::close(fd);
        fd = -1;
        return;
    }
}

ChildProc spawnChild(int nodeId, const std::vector<std::string>& argv, bool verbose) {
    (void)verbose;
    int outPipe[2], errPipe[2];
    if (::pipe(outPipe) != 0) throw LaunchError("pipe: " + std::string(std::strerror(errno)));
    if (::pipe(errPipe) != 0) {
        ::close(outPipe[0]);
        ::close(outPipe[1]);
        throw LaunchError("pipe: " + std::string(std::strerror(errno)));
    }

    std::vector<char*> cargv;
    cargv.reserve(argv.size() + 1);
    for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
    cargv.push_back(nullptr);

    pid_t pid = ::fork();
    if (pid < 0) {
        for (int fd : {outPipe[0], outPipe[1], errPipe[0], errPipe[1]}) ::close(fd);
        throw LaunchError("fork: " + std::string(std::strerror(errno)));
    }
    if (pid == 0) {
        ::dup2(outPipe[1], STDOUT_FILENO);
        ::dup2(errPipe[1], STDERR_FILENO);
        for (int fd : {outPipe[0], outPipe[1], errPipe[0], errPipe[1]}) ::close(fd);
        ::execv(cargv[0], cargv.data());
        ::fprintf(stderr, "ERROR cannot exec %s: %s\n", cargv[0], std::strerror(errno));
        ::_exit(127);
    }

    ::close(outPipe[1]);
    ::close(errPipe[1]);

    ChildProc child;
    child.nodeId = nodeId;
    child.pid = pid;
    child.outFd = outPipe[0];
    child.errFd = errPipe[0];
    child.report.nodeId = nodeId;
    return child;
}

void superviseChildren(std::vector<ChildProc>& children, std::chrono::seconds nodeTimeout,
                       bool verbose) {
    auto deadline = std::chrono::steady_clock::now() + nodeTimeout + kKillGrace;
    bool killed = false;

    auto anyPipeOpen = [&] {
        for (const auto& c : children)
            if (c.outFd >= 0 || c.errFd >= 0) return true;
        return false;
    };
    auto anyAlive = [&] {
        for (const auto& c : children)
            if (!c.exited) return true;
        return false;
    };

    while (anyPipeOpen() || anyAlive()) {
        std::vector<pollfd> fds;
        for (auto& c : children) {
            if (c.outFd >= 0) fds.push_back({c.outFd, POLLIN, 0});
            if (c.errFd >= 0) fds.push_back({c.errFd, POLLIN, 0});
        }
        if (!fds.empty()) {
            ::poll(fds.data(), fds.size(), 100);
            for (auto& c : children) {
                for (const auto& p : fds) {
                    if (p.fd == c.outFd && (p.revents & (POLLIN | POLLHUP | POLLERR)))
                        drainFd(c, c.outFd, c.outBuf, false, verbose);
                    else if (p.fd == c.errFd && (p.revents & (POLLIN | POLLHUP | POLLERR)))
                        drainFd(c, c.errFd, c.errBuf, true, verbose);
                }
            }
        }

        for (auto& c : children) {
            if (c.exited) continue;
            int status = 0;
            pid_t r = ::waitpid(c.pid, &status, WNOHANG);
            if (r == c.pid) {
                c.exited = true;
                if (WIFEXITED(status)) c.report.exitCode = WEXITSTATUS(status);
                else if (WIFSIGNALED(status)) c.report.exitCode = 128 + WTERMSIG(status);
                else c.report.exitCode = 1;
            }
        }

        if (!killed && std::chrono::steady_clock::now() > deadline) {
            killed = true;
            for (auto& c : children) {
                if (!c.exited) {
                    ::kill(c.pid, SIGKILL);
                    c.report.errorText = "killed after timeout";
                }
            }
        }
        if (fds.empty() && anyAlive()) std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
}

RunReport launchTcp(const LaunchSpec& spec) {
    std::vector<std::string> baseArgs;
    const bool builtin = !spec.exampleName.empty();
    if (builtin) {
        if (spec.selfExe.empty())
            throw LaunchError("selfExe must point at a binary providing run-node");
        baseArgs = {spec.selfExe, "run-node", "--example", spec.exampleName,
                    "--iters", std::to_string(effectiveIters(spec)),
                    "--timeout", std::to_string(spec.nodeTimeout.count())};
    } else {
        baseArgs = {spec.programPath};
    }

    std::set<int> absent(spec.absentNodes.begin(), spec.absentNodes.end());
    std::vector<ChildProc> children;
    try {
        for (int id = 0; id < spec.noNodes; ++id) {
            if (absent.count(id)) continue;
            std::vector<std::string> argv = baseArgs;
            argv.push_back(std::to_string(id));
            argv.push_back(std::to_string(spec.noNodes));
            argv.push_back(std::to_string(spec.flSrvId));
            argv.push_back(std::to_string(spec.basePort));
            argv.push_back("--transport");
            argv.push_back("tcp");
            argv.push_back("--seed");
            argv.push_back(std::to_string(spec.seed));
            if (!builtin || exampleEmitsTrace(spec)) {
                argv.push_back("--trace");
                argv.push_back(tracePathFor(spec, id));
            }
            children.push_back(spawnChild(id, argv, spec.verbose));
        }
    } catch (...) {
        for (auto& c : children) {
            ::kill(c.pid, SIGKILL);
            ::waitpid(c.pid, nullptr, 0);
            if (c.outFd >= 0) ::close(c.outFd);
            if (c.errFd >= 0) ::close(c.errFd);
        }
        throw;
    }

    superviseChildren(children, spec.nodeTimeout, spec.verbose);

    RunReport report;
    for (auto& c : children) {
        if (!c.resultLines.empty()) {
            try {
                c.report.finalData = parseValue(c.resultLines.back());
            } catch (const DecodeError&) {
                c.report.finalData.reset();
            }
        }
        if (c.report.exitCode != 0 && c.report.errorText.empty())
            c.report.errorText = c.lastErrorLine;
        report.nodes.push_back(std::move(c.report));
    }
    for (int id : spec.absentNodes) {
        NodeReport r;
        r.nodeId = id;
        r.exitCode = -1;
        r.errorText = "never started";
        report.nodes.push_back(std::move(r));
    }
    std::sort(report.nodes.begin(), report.nodes.end(),
              [](const NodeReport& a, const NodeReport& b) { return a.nodeId < b.nodeId; });
    return report;
}

RunReport launchSim(const LaunchSpec& spec) {
    const auto* prog = requireExample(spec.exampleName);
    const int iters = effectiveIters(spec);

    SimNetwork net(spec.noNodes, DeliverySchedule{spec.seed, spec.simPolicy});
    std::set<int> absent(spec.absentNodes.begin(), spec.absentNodes.end());
    std::vector<int> live;
    for (int id = 0; id < spec.noNodes; ++id)
        if (!absent.count(id)) live.push_back(id);
    for (int id : live) net.expectNode(id);

    std::vector<NodeReport> reports(static_cast<size_t>(spec.noNodes));
    for (int id = 0; id < spec.noNodes; ++id) reports[static_cast<size_t>(id)].nodeId = id;

    auto factory = net.transportFactory();
    std::vector<std::thread> threads;
    threads.reserve(live.size());
    for (int id : live) {
        threads.emplace_back([&, id] {
            NodeReport& rep = reports[static_cast<size_t>(id)];
            try {
                net.runNode(id, [&] {
                    std::unique_ptr<TraceWriter> writer;
                    examples::TraceFn traceFn;
                    if (prog->emitsTrace) {
                        writer = std::make_unique<TraceWriter>(tracePathFor(spec, id));
                        traceFn = [&writer](const TraceRow& row) { writer->append(row); };
                    }
                    Node node(nodeConfigFor(spec, id), factory);
                    FLValue ret = prog->run(node, iters, traceFn);
                    rep.finalData = std::move(ret);
                    rep.exitCode = 0;
                });
            } catch (const Error& e) {
                rep.exitCode = 1;
                rep.errorText = e.what();
            } catch (const std::exception& e) {
                rep.exitCode = 1;
                rep.errorText = e.what();
            }
            rep.output.push_back("[node " + std::to_string(id) + "] " +
                                 (rep.exitCode == 0
                                      ? "RESULT " + canonicalText(*rep.finalData)
                                      : "ERROR " + rep.errorText));
        });
    }
    for (auto& t : threads) t.join();

    for (int id : spec.absentNodes) {
        reports[static_cast<size_t>(id)].exitCode = -1;
        reports[static_cast<size_t>(id)].errorText = "never started";
    }

    RunReport report;
    report.nodes = std::move(reports);
    return report;
}

} // namespace

bool RunReport::ok() const {
    if (nodes.empty()) return false;
    for (const auto& n : nodes)
        if (n.exitCode != 0 || !n.finalData) return false;
    return true;
}

TraceTable mergeTraces(const std::vector<std::string>& files) {
    TraceTable merged;
    for (const auto& file : files) {
        TraceTable rows = readTraceFile(file);
        merged.insert(merged.end(), std::make_move_iterator(rows.begin()),
                      std::make_move_iterator(rows.end()));
    }
    sortTrace(merged);
    return merged;
}

RunReport launch(const LaunchSpec& spec) {
    validateSpec(spec);
    auto start = std::chrono::steady_clock::now();

    RunReport report =
        spec.transport == TransportKind::Tcp ? launchTcp(spec) : launchSim(spec);

    if (exampleEmitsTrace(spec)) {
        std::vector<std::string> files;
        for (int id = 0; id < spec.noNodes; ++id) {
            std::string path = tracePathFor(spec, id);
            if (fs::exists(path)) files.push_back(path);
        }
        try {
            report.mergedTrace = mergeTraces(files);
        } catch (const TraceFormatError&) {
            // incomplete traces from a failed run are not a launch error
        }
        if (!report.mergedTrace.empty()) {
            std::ofstream mergedOut(fs::path(spec.traceDir) / "trace_merged.csv");
            mergedOut << traceTableCsv(report.mergedTrace);
            try {
                report.convergence = examples::convergencePoint(report.mergedTrace);
            } catch (const Error&) {
                // convergence is only reported for complete numeric traces
            }
        }
    }

    report.durationSec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

void printRunReport(const RunReport& report, std::ostream& out) {
    for (const auto& n : report.nodes) {
        out << "node " << n.nodeId << ": ";
        if (n.exitCode == 0 && n.finalData) {
            out << "exit 0 result " << canonicalText(*n.finalData) << "\n";
        } else {
            out << "exit " << n.exitCode;
            if (!n.errorText.empty()) out << " error " << n.errorText;
            out << "\n";
        }
    }
    if (report.convergence) out << examples::convergenceSummary(*report.convergence) << "\n";
    int failed = 0;
    for (const auto& n : report.nodes)
        if (n.exitCode != 0 || !n.finalData) ++failed;
    if (failed == 0) {
        out << "ok: " << report.nodes.size() << " nodes in " << report.durationSec << "s\n";
    } else {
        out << "failed: " << failed << " of " << report.nodes.size() << " nodes in "
            << report.durationSec << "s\n";
    }
}

int runNodeMain(const RunNodeArgs& args) {
    try {
        if (args.transport != "tcp")
            throw ConfigError("run-node supports the tcp transport only");
        const auto* prog = examples::findExample(args.exampleName);
        if (!prog) throw ConfigError("unknown example \"" + args.exampleName + "\"");

        NodeConfig cfg;
        cfg.noNodes = args.noNodes;
        cfg.nodeId = args.nodeId;
        cfg.flSrvId = args.flSrvId;
        cfg.basePort = args.basePort;
        cfg.recvTimeout = std::chrono::duration_cast<std::chrono::milliseconds>(args.recvTimeout);
        cfg.validate();

        std::unique_ptr<TraceWriter> writer;
        examples::TraceFn traceFn;
        if (!args.tracePath.empty() && prog->emitsTrace) {
            writer = std::make_unique<TraceWriter>(args.tracePath);
            traceFn = [&writer](const TraceRow& row) { writer->append(row); };
        }

        int iters = args.noIters.value_or(prog->defaultIters);
        Node node(cfg, tcpTransportFactory());
        FLValue ret = prog->run(node, iters, traceFn);
        std::cout << "RESULT " << canonicalText(ret) << std::endl;
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "ERROR " << e.what() << std::endl;
        return 1;
    }
}

} // namespace fedbed
