// SPDX-License-Identifier: Apache-2.0
#include <cstdio>
#include <deque>
#include <filesystem>
#include <string>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "multilog/experiment.hpp"
#include "multilog/gradcheck.hpp"

namespace fs = std::filesystem;
using namespace multilog;

namespace {

// Flags that map onto ExperimentConfig keys; applied after --config.
class Overrides {
public:
    void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
        auto& slot = slots_.emplace_back(Slot{key, {}, nullptr});
        slot.option = app->add_option(flag, slot.value, help);
    }
    void add_config(CLI::App* app) {
        app->add_option("--config", config_, "Flat key=value config file; flags override it")
            ->check(CLI::ExistingFile);
    }
    ExperimentConfig build() const {
        ExperimentConfig cfg;
        if (!config_.empty()) cfg.load_file(config_);
        apply(cfg);
        return cfg;
    }
    void apply(ExperimentConfig& cfg) const {
        for (const auto& s : slots_) {
            if (s.option->count() > 0) cfg.set(s.key, s.value);
        }
    }

private:
    struct Slot {
        std::string key;
        std::string value;
        CLI::Option* option;
    };
    std::deque<Slot> slots_;
    std::string config_;
};

void add_generator_flags(CLI::App* app, Overrides& o) {
    o.add(app, "--seed", "seed", "Random seed");
    o.add(app, "--scenario", "scenario", "Single2Single | Single2Multi | Multi2Single | Multi2Multi");
    o.add(app, "--n-nodes", "n_nodes", "Cluster size");
    o.add(app, "--duration-s", "duration_s", "Simulated seconds");
    o.add(app, "--base-rate", "base_rate", "Normal lines per node per second");
    o.add(app, "--anomaly-set", "anomaly_set", "Comma-separated anomaly types (1-11)");
    o.add(app, "--inject-len-s", "inject_len_s", "Seconds per injection");
    o.add(app, "--rest-len-s", "rest_len_s", "Seconds of normal operation between injections");
    o.add(app, "--noise-rate", "noise_rate", "Background warning lines per node per second");
}

void add_model_flags(CLI::App* app, Overrides& o) {
    o.add(app, "--dataset", "dataset", "Dataset directory (generated from the seed when omitted)");
    o.add(app, "--window-ms", "window_ms", "Window length T in ms (default 5000)");
    o.add(app, "--group-len", "group_len", "Events per group M (default 20)");
    o.add(app, "--beta", "beta", "Fixed probability-list length (default 128)");
    o.add(app, "--mu", "mu", "Latent length (default 32)");
    o.add(app, "--split", "split", "Training fraction of windows, oldest first (default 0.7)");
    o.add(app, "--epochs", "epochs", "Standalone estimator epochs");
    o.add(app, "--per-node-models", "per_node_models", "One standalone estimator per node (true/false)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-node log anomaly detection"};
    app.require_subcommand(1);

    Overrides gen_o, parse_o, train_o, eval_o, run_o;

    auto* gen = app.add_subcommand("generate", "Write a synthetic labeled cluster dataset");
    std::string gen_out;
    gen->add_option("--out", gen_out, "Output directory")->required();
    gen_o.add_config(gen);
    add_generator_flags(gen, gen_o);

    auto* parse = app.add_subcommand("parse", "Mine templates on the training range and freeze them");
    std::string parse_out;
    parse->add_option("--out", parse_out, "Template file to write")->required();
    parse_o.add_config(parse);
    add_generator_flags(parse, parse_o);
    add_model_flags(parse, parse_o);

    auto* train = app.add_subcommand("train", "Train the standalone estimator, autoencoder and meta-classifier");
    std::string train_out;
    train->add_option("--out", train_out, "Checkpoint directory")->required();
    train_o.add_config(train);
    add_generator_flags(train, train_o);
    add_model_flags(train, train_o);

    auto* eval = app.add_subcommand("eval", "Score the test windows with trained checkpoints");
    std::string eval_model, eval_out, eval_dataset;
    eval->add_option("--model", eval_model, "Checkpoint directory from 'train'")->required()->check(CLI::ExistingDirectory);
    eval->add_option("--dataset", eval_dataset, "Dataset directory (defaults to the training data)");
    eval->add_option("--out", eval_out, "Report directory")->required();

    auto* report = app.add_subcommand("report", "Re-render the CSVs of a report directory");
    std::string report_dir;
    report->add_option("dir", report_dir, "Report directory")->required()->check(CLI::ExistingDirectory);

    auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of every analytic gradient");
    std::uint64_t grad_seed = 1;
    double grad_tol = 1e-4;
    grad->add_option("--seed", grad_seed, "Seed for the random inputs");
    grad->add_option("--tolerance", grad_tol, "Maximum relative error");

    auto* run = app.add_subcommand("run", "Generate or load, train and evaluate in one go");
    std::string run_out;
    run->add_option("--out", run_out, "Report directory")->required();
    run_o.add_config(run);
    add_generator_flags(run, run_o);
    add_model_flags(run, run_o);

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            const auto cfg = gen_o.build();
            auto g = cfg.generator;
            g.seed = cfg.seed;
            const auto summary = generate(g, gen_out);
            std::fputs(summary.to_text(load_dataset(gen_out)).c_str(), stdout);
        } else if (parse->parsed()) {
            const auto cfg = parse_o.build();
            cfg.validate();
            const auto ds = load_or_generate(cfg);
            const auto data = prepare(ds, cfg);
            data.registry->save(parse_out);
            fmt::print("{} templates mined from the first {} of {} windows\n", data.registry->size(),
                       data.train_windows, data.windows.size());
            for (const auto& t : data.registry->templates()) fmt::print("  {:>3}  {}\n", t.id, t.text());
        } else if (train->parsed()) {
            const auto cfg = train_o.build();
            cfg.validate();
            const auto ds = load_or_generate(cfg);
            const auto data = prepare(ds, cfg);
            check_temporal_split(data);
            const auto pipeline = train_pipeline(data, cfg);
            pipeline.save(train_out, cfg);
            for (const auto& t : pipeline.timings) fmt::print("{:<16} {:8.2f} s\n", t.stage, t.seconds);
            fmt::print("checkpoints written to {}\n", train_out);
        } else if (eval->parsed()) {
            ExperimentConfig cfg;
            const auto pipeline = TrainedPipeline::load(eval_model, cfg);
            if (!eval_dataset.empty()) cfg.dataset = eval_dataset;
            const auto ds = load_or_generate(cfg);
            const auto data = prepare(ds, cfg, pipeline.registry);
            auto r = evaluate(pipeline, data, cfg);
            r.scenario = std::string(to_string(ds.scenario));
            r.write_csv(eval_out);
            const auto text = r.to_text();
            std::ofstream(fs::path(eval_out) / "report.txt") << text;
            std::fputs(text.c_str(), stdout);
        } else if (report->parsed()) {
            std::fputs(render_report_dir(report_dir).c_str(), stdout);
        } else if (grad->parsed()) {
            bool ok = true;
            for (const auto& r : gradcheck::run_suite(grad_seed)) {
                const bool pass = r.passed(grad_tol);
                ok = ok && pass;
                fmt::print("{:<24} {:>6} values  max rel err {:.3e}  {}\n", r.name, r.checked, r.max_rel_error,
                           pass ? "ok" : "FAILED");
            }
            return ok ? 0 : 1;
        } else if (run->parsed()) {
            const auto cfg = run_o.build();
            const auto r = run_experiment(cfg);
            r.write_csv(run_out);
            const auto text = r.to_text();
            std::ofstream(fs::path(run_out) / "report.txt") << text;
            std::ofstream(fs::path(run_out) / "experiment.conf") << cfg.to_text();
            std::fputs(text.c_str(), stdout);
        }
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    }
    return 0;
}
