// qhunt: headless training, oracle, experiment, inspection and serving.

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "qhunt/bridge_server.hpp"
#include "qhunt/commands.hpp"
#include "qhunt/experiment.hpp"
#include "qhunt/inspect.hpp"
#include "qhunt/session_server.hpp"

namespace {

using namespace qhunt;

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted = true; }

struct CommonFlags {
    std::string config;
    std::optional<double> alpha, gamma, epsilon;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config, "maze config JSON (default layout when omitted)");
    cmd->add_option("--alpha", f.alpha, "learning rate, overrides the config");
    cmd->add_option("--gamma", f.gamma, "discount, overrides the config");
    cmd->add_option("--epsilon", f.epsilon, "exploration rate, overrides the config");
}

TrainingConfig resolve(const CommonFlags& f) {
    TrainingConfig tc = f.config.empty() ? TrainingConfig{} : load_training_config(f.config);
    try {
        if (f.alpha) tc.hyperparams.set_alpha(*f.alpha);
        if (f.gamma) tc.hyperparams.set_gamma(*f.gamma);
        if (f.epsilon) tc.hyperparams.set_epsilon(*f.epsilon);
    } catch (const Error& e) {
        throw ConfigError({e.what()});
    }
    return tc;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        try {
            const auto dash = part.find('-');
            if (dash == std::string::npos) {
                seeds.push_back(std::stoull(part));
            } else {
                const auto lo = std::stoull(part.substr(0, dash));
                const auto hi = std::stoull(part.substr(dash + 1));
                if (hi < lo) throw std::invalid_argument(part);
                for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
            }
        } catch (const std::logic_error&) {
            throw ConfigError({"bad seed list entry '" + part + "'"});
        }
    }
    return seeds;
}

void wait_for_interrupt() {
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(200));
}

int report(const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    if (auto* p = dynamic_cast<const ParseError*>(&e)) std::cerr << "  at byte offset " << p->offset() << '\n';
    if (auto* c = dynamic_cast<const ConfigError*>(&e))
        for (const auto& problem : c->problems()) std::cerr << "  - " << problem << '\n';
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Human-in-the-loop Q-learning treasure hunt"};
    app.require_subcommand(1);

    // train
    CommonFlags train_flags;
    std::uint64_t train_seed = 0;
    std::size_t train_episodes = 5000;
    std::string train_out = "session.json";
    std::string train_bridge;
    auto* train_cmd = app.add_subcommand("train", "train headless; writes a session snapshot and a learning-curve CSV");
    add_common(train_cmd, train_flags);
    train_cmd->add_option("--seed", train_seed, "RNG seed");
    train_cmd->add_option("--episodes", train_episodes, "episodes to train");
    train_cmd->add_option("--out", train_out, "snapshot path; the CSV goes next to it");
    train_cmd->add_option("--bridge", train_bridge, "mirror every step to a robot bridge at this URL");

    // oracle
    CommonFlags oracle_flags;
    double oracle_tol = 1e-8;
    std::string oracle_out = "oracle.json";
    auto* oracle_cmd = app.add_subcommand("oracle", "value iteration; writes a Q-table export");
    add_common(oracle_cmd, oracle_flags);
    oracle_cmd->add_option("--tol", oracle_tol, "stop when a sweep changes no entry by this much");
    oracle_cmd->add_option("--out", oracle_out, "output path");

    // experiment
    CommonFlags exp_flags;
    std::string exp_seeds = "1-50";
    std::size_t exp_episodes = 1000;
    std::size_t exp_k = 10;
    double exp_p = 1.0;
    std::string exp_out = "experiment.csv";
    auto* exp_cmd = app.add_subcommand("experiment", "advised versus autonomous episodes-to-first-optimal");
    add_common(exp_cmd, exp_flags);
    exp_cmd->add_option("--seed,--seeds", exp_seeds, "seed list, e.g. 1-50 or 3,7,9");
    exp_cmd->add_option("--episodes", exp_episodes, "episode cap per run");
    exp_cmd->add_option("--advice-episodes", exp_k, "advise during the first k episodes");
    exp_cmd->add_option("--advice-probability", exp_p, "chance of advising at each step");
    exp_cmd->add_option("--out", exp_out, "CSV path; _curves.csv and _summary.json go next to it");

    // inspect
    std::string inspect_path;
    std::string inspect_config;
    auto* inspect_cmd = app.add_subcommand("inspect", "print a snapshot or Q-table export");
    inspect_cmd->add_option("path", inspect_path, "session snapshot or Q-table export")->required();
    inspect_cmd->add_option("--config", inspect_config, "maze config for a Q-table export");

    // serve
    std::string serve_config;
    std::string serve_server_config;
    int serve_port = -1;
    int serve_bridge_port = 8081;
    std::string serve_bridge;
    std::uint64_t serve_drift_seed = 0;
    auto* serve_cmd = app.add_subcommand("serve", "run the session server and a simulated robot bridge");
    serve_cmd->add_option("--config", serve_config, "maze config for the simulated robot");
    serve_cmd->add_option("--server-config", serve_server_config, "server config JSON");
    serve_cmd->add_option("--port", serve_port, "session server port");
    serve_cmd->add_option("--bridge", serve_bridge, "use an existing bridge at this URL instead of the simulator");
    serve_cmd->add_option("--bridge-port", serve_bridge_port, "port for the simulated bridge");
    serve_cmd->add_option("--drift-seed", serve_drift_seed, "seed for the simulated heading drift");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train_cmd) {
            const TrainingConfig tc = resolve(train_flags);
            std::shared_ptr<bridge::Link> link;
            if (!train_bridge.empty()) link = std::make_shared<bridge::HttpLink>(train_bridge);
            const TrainResult r = train(tc.maze, tc.hyperparams, train_episodes, train_seed, link);
            const auto csv = save_training_outputs(train_out, r.state);
            const auto trace = greedy_trace(r.state.q, tc.maze);
            std::cout << "trained " << r.state.episodes.size() << " episodes (seed " << train_seed << ")\n"
                      << "snapshot " << train_out << "\ncurve    " << csv.string() << "\ngreedy   ";
            for (const auto& t : trace) std::cout << to_letter(t.action);
            std::cout << '\n';
            if (r.bridge_failed) {
                std::cerr << "error: robot bridge unreachable; training stopped early\n";
                return 1;
            }
            return 0;
        }

        if (*oracle_cmd) {
            const TrainingConfig tc = resolve(oracle_flags);
            ValueIterationResult detail;
            const QTableExport e = oracle_export(tc.maze, tc.hyperparams.gamma(), oracle_tol, &detail);
            save_qtable_export(oracle_out, e);
            std::cout << "value iteration: " << detail.sweeps << " sweeps, residual "
                      << bellman_residual(e.values, tc.maze, tc.hyperparams.gamma()) << "\ngreedy path: ";
            for (const auto& t : greedy_trace(e.values, tc.maze)) std::cout << to_letter(t.action);
            std::cout << "\nwrote " << oracle_out << '\n';
            return 0;
        }

        if (*exp_cmd) {
            ExperimentSpec spec;
            spec.config = resolve(exp_flags);
            spec.seeds = parse_seeds(exp_seeds);
            spec.episodes = exp_episodes;
            spec.teacher = {exp_k, exp_p};
            const ExperimentReport r = run_experiment(spec);
            save_experiment(exp_out, spec, r);
            for (const ArmSummary* s : {&r.autonomous, &r.advised})
                std::cout << to_string(s->arm) << ": median episodes-to-first-optimal "
                          << s->median_episodes_to_first_optimal << " (censored " << s->censored
                          << "), median episodes-to-greedy-optimal " << s->median_episodes_to_greedy_optimal
                          << " (censored " << s->greedy_censored << "), advised steps " << s->advised_steps
                          << '\n';
            std::cout << "wrote " << exp_out << '\n';
            return 0;
        }

        if (*inspect_cmd) {
            std::optional<MazeConfig> cfg;
            if (!inspect_config.empty()) cfg = load_training_config(inspect_config).maze;
            std::cout << inspect_text(load_inspect_input(inspect_path, cfg));
            return 0;
        }

        if (*serve_cmd) {
            ServerConfig sc = serve_server_config.empty() ? ServerConfig{} : load_server_config(serve_server_config);
            if (!serve_bridge.empty()) sc.bridge_url = serve_bridge;
            sc = apply_env_overrides(sc);
            if (serve_port >= 0) sc.port = serve_port;

            std::unique_ptr<bridge::BridgeServer> sim;
            if (!sc.bridge_url) {
                const MazeConfig geometry = serve_config.empty() ? default_config() : load_training_config(serve_config).maze;
                sim = std::make_unique<bridge::BridgeServer>(bridge::RobotSimulator(geometry, serve_drift_seed));
                const int port = sim->start(sc.host, serve_bridge_port);
                sc.bridge_url = "http://" + sc.host + ":" + std::to_string(port);
                std::cout << "robot simulator on " << *sc.bridge_url << '\n';
            }
            SessionServer server(sc);
            const int port = server.start();
            std::cout << "session server on http://" << sc.host << ':' << port << " (bridge " << *sc.bridge_url
                      << ")\n" << std::flush;
            wait_for_interrupt();
            server.stop();
            if (sim) sim->stop();
            return 0;
        }
    } catch (const std::exception& e) {
        return report(e);
    }
    return 0;
}
