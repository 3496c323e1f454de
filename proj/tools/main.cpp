#include "ltesim/attacker.hpp"
#include "ltesim/scenario.hpp"
#include "ltesim/simulator.hpp"
#include "ltesim/tracking_diff.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace ltesim;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitScenarioInvalid = 2;
constexpr int kExitInvariant = 3;

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& data)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
    out << data;
}

json read_json(const std::string& path)
{
    return json::parse(read_file(path));
}

int cmd_run(const std::string& scenario_path, const std::string& capture_path, const std::string& report_path,
            const std::string& truth_path, std::optional<std::uint64_t> seed)
{
    auto scenario = load_scenario(scenario_path);
    if (seed) {
        scenario.seed = *seed;
    }
    const auto result = run(scenario);
    if (!capture_path.empty()) {
        write_file(capture_path, result.capture);
    }
    if (!report_path.empty()) {
        write_file(report_path, (result.report ? *result.report : json(nullptr)).dump(2) + "\n");
    }
    if (!truth_path.empty()) {
        write_file(truth_path, result.ground_truth.to_json().dump(2) + "\n");
    }

    json ues = json::array();
    for (const auto& u : result.ground_truth.ues) {
        ues.push_back({{"imsi", u.imsi}, {"final_phase", u.final_phase}, {"visits", u.visits.size()}});
    }
    json catcher = json::array();
    for (const auto& e : result.catcher_log.entries()) {
        catcher.push_back({{"t", e.timestamp_ms}, {"imsi", e.imsi.digits()}});
    }
    json summary{
        {"seed", scenario.seed},
        {"duration_ms", scenario.duration_ms},
        {"capture_sha256", result.capture_hash},
        {"ues", std::move(ues)},
        {"catcher_log", std::move(catcher)},
        {"drops", result.drops},
        {"tracking", nullptr},
    };
    if (auto metrics = diff_tracking(result.ground_truth, result.report)) {
        summary["tracking"] = metrics->to_json();
    }
    std::cout << summary.dump(2) << "\n";
    return kExitOk;
}

int cmd_scan(const std::string& capture_path)
{
    const auto records = parse_capture(read_file(capture_path));
    std::cout << rogue_config_to_json(scan_broadcast(records)).dump(2) << "\n";
    return kExitOk;
}

int cmd_replay(const std::string& capture_path, const std::string& out_path)
{
    const auto report = replay(read_file(capture_path));
    if (out_path.empty()) {
        std::cout << report.dump(2) << "\n";
    } else {
        write_file(out_path, report.dump(2) + "\n");
    }
    return kExitOk;
}

int cmd_diff(const std::string& truth_path, const std::string& report_path)
{
    const auto truth = GroundTruth::from_json(read_json(truth_path));
    const auto report = read_json(report_path);
    const auto metrics = diff_tracking(truth, report.is_null() ? std::nullopt : std::optional<json>(report));
    std::cout << (metrics ? metrics->to_json() : json(nullptr)).dump(2) << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Control-plane simulator for LTE attack and tracking scenarios"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string capture_out;
    std::string report_out;
    std::string truth_out;
    std::optional<std::uint64_t> seed;
    auto* run_cmd = app.add_subcommand("run", "Run a scenario");
    run_cmd->add_option("scenario", scenario_path, "Scenario JSON file")->required();
    run_cmd->add_option("--capture", capture_out, "Write the capture log (JSON Lines)");
    run_cmd->add_option("--report", report_out, "Write the sniffer tracking report");
    run_cmd->add_option("--ground-truth", truth_out, "Write the ground truth");
    run_cmd->add_option("--seed", seed, "Override the scenario seed");

    std::string scan_capture;
    auto* scan_cmd = app.add_subcommand("scan", "Draft a rogue cell configuration from captured broadcasts");
    scan_cmd->add_option("capture", scan_capture, "Capture log")->required();

    std::string replay_capture;
    std::string replay_out;
    auto* replay_cmd = app.add_subcommand("replay", "Re-run the sniffer over a saved capture");
    replay_cmd->add_option("capture", replay_capture, "Capture log")->required();
    replay_cmd->add_option("--out", replay_out, "Write the report here instead of stdout");

    std::string diff_truth;
    std::string diff_report;
    auto* diff_cmd = app.add_subcommand("diff", "Compare a tracking report against ground truth");
    diff_cmd->add_option("ground_truth", diff_truth, "Ground truth JSON")->required();
    diff_cmd->add_option("report", diff_report, "Tracking report JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (run_cmd->parsed()) {
            return cmd_run(scenario_path, capture_out, report_out, truth_out, seed);
        }
        if (scan_cmd->parsed()) {
            return cmd_scan(scan_capture);
        }
        if (replay_cmd->parsed()) {
            return cmd_replay(replay_capture, replay_out);
        }
        if (diff_cmd->parsed()) {
            return cmd_diff(diff_truth, diff_report);
        }
    } catch (const ScenarioInvalid& e) {
        std::cerr << "scenario invalid: " << e.what() << "\n";
        return kExitScenarioInvalid;
    } catch (const SimulationInvariantViolation& e) {
        std::cerr << "invariant violation: " << e.what() << "\n";
        return kExitInvariant;
    } catch (const CoreInvariantViolation& e) {
        std::cerr << "invariant violation: " << e.what() << "\n";
        return kExitInvariant;
    } catch (const IllegalTransition& e) {
        std::cerr << "invariant violation: " << e.what() << "\n";
        return kExitInvariant;
    } catch (const CodecError& e) {
        std::cerr << (e.code() == CodecErrc::InvariantViolation ? "invariant violation: " : "error: ") << e.what()
                  << "\n";
        return e.code() == CodecErrc::InvariantViolation ? kExitInvariant : kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
