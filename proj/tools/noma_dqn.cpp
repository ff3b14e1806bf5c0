// Command-line front end: train / sweep-lr / sweep-lambda / evaluate / plot.
// Exit codes: 0 success, 1 configuration error, 2 runtime failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nomadqn/checkpoint.hpp"
#include "nomadqn/config.hpp"
#include "nomadqn/experiment.hpp"
#include "nomadqn/log.hpp"
#include "nomadqn/svg_plot.hpp"

namespace fs = std::filesystem;
using namespace nomadqn;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string output_dir = "out";
    std::vector<std::uint64_t> seeds;
    int jobs = 1;
    bool force = false;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_jobs = true) {
    cmd->add_option("--config", o.config_path, "JSON config file");
    cmd->add_option("--output", o.output_dir, "output directory");
    cmd->add_option("--seed", o.seeds, "seed list overriding the config")
        ->delimiter(',');
    if (with_jobs) cmd->add_option("--jobs", o.jobs, "parallel run limit");
    cmd->add_flag("--force", o.force, "overwrite existing outputs");
}

config::RunManifest load_manifest(const CommonOpts& o) {
    config::RunManifest m = o.config_path.empty()
                                ? config::manifest_from_json(nlohmann::json::object())
                                : config::parse_config(o.config_path);
    m.output_dir = o.output_dir;
    if (!o.seeds.empty()) m.plan.seeds = o.seeds;
    return m;
}

// Refuses to reuse an output directory that already holds results.
void prepare_output_dir(const config::RunManifest& m, bool force) {
    fs::create_directories(m.output_dir);
    const fs::path marker = fs::path(m.output_dir) / "result.json";
    if (fs::exists(marker) && !force)
        throw config::ConfigError("output directory '" + m.output_dir +
                                  "' already holds results; pass --force to overwrite");
    // Provenance echo before any run starts.
    std::ofstream os(fs::path(m.output_dir) / "config_resolved.json");
    os << config::manifest_to_json(m).dump(2) << '\n';
    if (!os) throw std::runtime_error("cannot write to output directory " + m.output_dir);
}

void write_result_json(const config::RunManifest& m, const std::string& command,
                       nlohmann::json extra) {
    nlohmann::json result;
    result["command"] = command;
    result["tool_version"] = m.tool_version;
    result["seeds"] = m.plan.seeds;
    result["config_hash"] = config::config_hash(m);
    result["details"] = std::move(extra);
    std::ofstream os(fs::path(m.output_dir) / "result.json");
    os << result.dump(2) << '\n';
    if (!os) throw std::runtime_error("cannot write result.json");
}

nlohmann::json record_summary_json(const experiment::RunRecord& r) {
    nlohmann::json j;
    j["tag"] = r.tag;
    j["seed"] = r.seed;
    j["lambda"] = r.lambda;
    j["learning_rate"] = r.learning_rate;
    j["greedy_mean_reward"] = r.greedy_mean_reward;
    j["greedy_mean_spectral_eff"] = r.greedy_mean_spectral_eff;
    for (int ti = 0; ti < experiment::kNumDeviceTypes; ++ti) {
        const char* name = env::device_type_name(experiment::kDeviceTypes[ti]);
        j["mean_throughput_mbps"][name] = r.mean_throughput_mbps[ti];
        j["mean_latency_ms"][name] = r.mean_latency_ms[ti];
        j["median_throughput_mbps"][name] = r.median_throughput_mbps[ti];
        j["median_latency_ms"][name] = r.median_latency_ms[ti];
        j["violation_rate"][name] = r.violation_rate[ti];
    }
    j["total_env_steps"] = r.total_env_steps;
    j["gradient_steps"] = r.gradient_steps;
    j["wall_clock_seconds"] = r.wall_clock_seconds;
    return j;
}

int cmd_train(const CommonOpts& o) {
    auto m = load_manifest(o);
    prepare_output_dir(m, o.force);
    const std::uint64_t seed = m.plan.seeds.front();
    const std::string tag = "train_s" + std::to_string(seed);
    dqn::Checkpoint ck;
    auto rec = experiment::train(m.factory, m.agent, m.plan, seed, tag, &ck);
    experiment::write_run_csv(rec, (fs::path(m.output_dir) / ("run_" + tag + ".csv")).string());
    dqn::save_checkpoint((fs::path(m.output_dir) / ("checkpoint_" + tag + ".bin")).string(), ck);
    write_result_json(m, "train", nlohmann::json{{"runs", {record_summary_json(rec)}}});
    return 0;
}

int cmd_sweep_lr(const CommonOpts& o) {
    auto m = load_manifest(o);
    prepare_output_dir(m, o.force);
    std::vector<dqn::Checkpoint> checkpoints;
    auto records =
        experiment::sweep_learning_rates(m.factory, m.agent, m.plan, o.jobs, &checkpoints);
    nlohmann::json runs = nlohmann::json::array();
    for (std::size_t i = 0; i < records.size(); ++i) {
        experiment::write_run_csv(
            records[i], (fs::path(m.output_dir) / ("run_" + records[i].tag + ".csv")).string());
        dqn::save_checkpoint(
            (fs::path(m.output_dir) / ("checkpoint_" + records[i].tag + ".bin")).string(),
            checkpoints[i]);
        runs.push_back(record_summary_json(records[i]));
    }
    experiment::write_summary_csv(experiment::aggregate(records),
                                  (fs::path(m.output_dir) / "summary.csv").string());
    write_result_json(m, "sweep-lr", nlohmann::json{{"runs", runs}});
    return 0;
}

int cmd_sweep_lambda(const CommonOpts& o) {
    auto m = load_manifest(o);
    prepare_output_dir(m, o.force);
    std::vector<dqn::Checkpoint> checkpoints;
    auto records = experiment::sweep_lambda(m.factory, m.agent, m.plan, o.jobs, &checkpoints);
    nlohmann::json runs = nlohmann::json::array();
    for (std::size_t i = 0; i < records.size(); ++i) {
        experiment::write_run_csv(
            records[i], (fs::path(m.output_dir) / ("run_" + records[i].tag + ".csv")).string());
        dqn::save_checkpoint(
            (fs::path(m.output_dir) / ("checkpoint_" + records[i].tag + ".bin")).string(),
            checkpoints[i]);
        runs.push_back(record_summary_json(records[i]));
    }
    experiment::write_summary_csv(experiment::aggregate(records),
                                  (fs::path(m.output_dir) / "summary.csv").string());
    write_result_json(m, "sweep-lambda", nlohmann::json{{"runs", runs}});
    return 0;
}

int cmd_evaluate(const CommonOpts& o, const std::string& checkpoint_path) {
    auto m = load_manifest(o);
    if (!fs::exists(checkpoint_path))
        throw std::runtime_error("checkpoint not found: " + checkpoint_path);
    prepare_output_dir(m, o.force);
    const auto ck = dqn::load_checkpoint(checkpoint_path);
    const std::uint64_t seed = m.plan.seeds.front();
    auto rec = experiment::evaluate_policy(m.factory, ck.eval_params, m.plan, seed,
                                           "evaluate_s" + std::to_string(seed));
    write_result_json(m, "evaluate",
                      nlohmann::json{{"checkpoint", checkpoint_path},
                                     {"runs", {record_summary_json(rec)}}});
    log_info("evaluate: greedy mean reward " + csv::fixed(rec.greedy_mean_reward, 4));
    return 0;
}

int cmd_plot(const CommonOpts& o, const std::string& kind_str,
             const std::vector<std::string>& inputs) {
    const auto kind = plot::chart_kind_from_string(kind_str);
    const std::string svg = plot::plot_chart(kind, inputs);
    fs::create_directories(o.output_dir);
    const fs::path out = fs::path(o.output_dir) / (kind_str + ".svg");
    if (fs::exists(out) && !o.force)
        throw config::ConfigError("output file '" + out.string() +
                                  "' exists; pass --force to overwrite");
    std::ofstream os(out, std::ios::binary);
    os << svg;
    if (!os) throw std::runtime_error("cannot write " + out.string());
    log_info("wrote " + out.string());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"NOMA resource-allocation DQN simulator"};
    app.require_subcommand(1);

    CommonOpts train_o, lr_o, lambda_o, eval_o, plot_o;
    std::string checkpoint_path, plot_kind;
    std::vector<std::string> plot_inputs;

    auto* train = app.add_subcommand("train", "single training run (first seed)");
    add_common(train, train_o, false);
    auto* sweep_lr = app.add_subcommand("sweep-lr", "learning-rate sweep");
    add_common(sweep_lr, lr_o);
    auto* sweep_lambda = app.add_subcommand("sweep-lambda", "lambda sweep");
    add_common(sweep_lambda, lambda_o);
    auto* evaluate = app.add_subcommand("evaluate", "greedy rollout of a checkpoint");
    add_common(evaluate, eval_o, false);
    evaluate->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
    auto* plot = app.add_subcommand("plot", "render a chart from result CSVs");
    plot->add_option("--kind", plot_kind,
                     "reward_curve | throughput_vs_lambda | latency_vs_lambda")
        ->required();
    plot->add_option("csvs", plot_inputs, "input CSV files")->required();
    plot->add_option("--output", plot_o.output_dir, "output directory");
    plot->add_flag("--force", plot_o.force, "overwrite existing outputs");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return cmd_train(train_o);
        if (sweep_lr->parsed()) return cmd_sweep_lr(lr_o);
        if (sweep_lambda->parsed()) return cmd_sweep_lambda(lambda_o);
        if (evaluate->parsed()) return cmd_evaluate(eval_o, checkpoint_path);
        if (plot->parsed()) return cmd_plot(plot_o, plot_kind, plot_inputs);
    } catch (const config::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
