#include <unistd.h>

#include <iostream>
#include <limits.h>
#include <string>

#include <CLI11.hpp>

#include "fedbed/launcher.hpp"

namespace {

std::string selfExecutable() {
    char buf[PATH_MAX];
    ssize_t n = ::readlink("/proc/self/exe", buf, sizeof buf - 1);
    if (n <= 0) return "";
    buf[n] = '\0';
    return buf;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fedbed - localhost testbed for federated learning algorithms"};
    app.require_subcommand(1);

    // ------------------------------------------------------------- launch
    auto* launchCmd = app.add_subcommand("launch", "run a federated-learning program on n nodes");
    fedbed::LaunchSpec spec;
    std::string transport = "tcp";
    std::string simPolicy = "shuffle";
    long timeoutSecs = 30;
    launchCmd->add_option("--nodes", spec.noNodes, "number of nodes")->required();
    launchCmd->add_option("--example", spec.exampleName, "registered example to run");
    launchCmd->add_option("--program", spec.programPath, "user node program path");
    launchCmd->add_option("--server-id", spec.flSrvId, "server node id")->capture_default_str();
    launchCmd->add_option("--base-port", spec.basePort, "first node port")->capture_default_str();
    launchCmd->add_option("--iters", [&spec](const std::vector<std::string>& v) {
        spec.noIters = std::stoi(v.at(0));
        return true;
    }, "iteration count override");
    launchCmd->add_option("--transport", transport, "tcp | sim")->capture_default_str()
        ->check(CLI::IsMember({"tcp", "sim"}));
    launchCmd->add_option("--seed", spec.seed, "sim delivery schedule seed")->capture_default_str();
    launchCmd->add_option("--sim-policy", simPolicy, "sim delivery policy: fifo | shuffle")->capture_default_str()
        ->check(CLI::IsMember({"fifo", "shuffle"}));
    launchCmd->add_option("--trace-dir", spec.traceDir, "directory for trace CSV files")->capture_default_str();
    launchCmd->add_option("--timeout", timeoutSecs, "per-node timeout in seconds")->capture_default_str();
    launchCmd->add_flag("--verbose", spec.verbose, "stream prefixed node output live");
    launchCmd->add_option("--absent", spec.absentNodes,
                          "node ids to leave unstarted (fault injection)");

    // ----------------------------------------------------------- run-node
    auto* nodeCmd = app.add_subcommand("run-node", "run a single node (spawned by launch)");
    fedbed::RunNodeArgs nodeArgs;
    long nodeTimeoutSecs = 30;
    nodeCmd->add_option("nodeId", nodeArgs.nodeId)->required();
    nodeCmd->add_option("noNodes", nodeArgs.noNodes)->required();
    nodeCmd->add_option("flSrvId", nodeArgs.flSrvId)->required();
    nodeCmd->add_option("basePort", nodeArgs.basePort)->required();
    nodeCmd->add_option("--transport", nodeArgs.transport, "tcp | sim")->capture_default_str();
    nodeCmd->add_option("--seed", nodeArgs.seed, "accepted for contract compatibility");
    nodeCmd->add_option("--trace", nodeArgs.tracePath, "trace CSV file to write");
    nodeCmd->add_option("--example", nodeArgs.exampleName, "registered example to run")->required();
    nodeCmd->add_option("--iters", [&nodeArgs](const std::vector<std::string>& v) {
        nodeArgs.noIters = std::stoi(v.at(0));
        return true;
    }, "iteration count override");
    nodeCmd->add_option("--timeout", nodeTimeoutSecs, "receive timeout in seconds")->capture_default_str();

    // ------------------------------------------------------ list-examples
    auto* listCmd = app.add_subcommand("list-examples", "print the registered example names");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (launchCmd->parsed()) {
            spec.transport = transport == "sim" ? fedbed::TransportKind::Sim
                                                : fedbed::TransportKind::Tcp;
            spec.simPolicy = simPolicy == "fifo" ? fedbed::DeliveryPolicy::Fifo
                                                 : fedbed::DeliveryPolicy::SeededShuffle;
            spec.nodeTimeout = std::chrono::seconds(timeoutSecs);
            spec.selfExe = selfExecutable();
            fedbed::RunReport report = fedbed::launch(spec);
            fedbed::printRunReport(report, std::cout);
            return report.ok() ? 0 : 1;
        }
        if (nodeCmd->parsed()) {
            nodeArgs.recvTimeout = std::chrono::seconds(nodeTimeoutSecs);
            return fedbed::runNodeMain(nodeArgs);
        }
        if (listCmd->parsed()) {
            for (const auto& name : fedbed::examples::exampleNames())
                std::cout << name << "\n";
            return 0;
        }
    } catch (const fedbed::LaunchError& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 2;
    } catch (const fedbed::ConfigError& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
    return 2;
}
