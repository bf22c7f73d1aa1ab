// Copyright (C) 2026 the synthrank authors
// SPDX-License-Identifier: Apache-2.0
//
// synthrank CLI: offline batch driver for the synthetic-data reranker
// fine-tuning pipeline. Exit codes: 0 success, 2 config error, 3 backend
// error, 4 stage failure.

#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "synthrank/config.hpp"
#include "synthrank/errors.hpp"
#include "synthrank/jsonl.hpp"
#include "synthrank/pipeline.hpp"
#include "synthrank/query_gen.hpp"
#include "synthrank/trainer.hpp"
#include "synthrank/util.hpp"

namespace {

using namespace synthrank;

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitBackendError = 3;
constexpr int kExitStageFailure = 4;

struct CliOptions {
    std::string config_path;
    std::string out_override;
    bool resume = false;
    bool mock_backends = false;
    std::optional<std::uint64_t> seed_override;
    std::string report_format = "all";
    bool dry_run = false;
};

RunConfig load_config(const CliOptions& opts, bool check_paths) {
    if (opts.config_path.empty()) {
        throw ConfigError("--config PATH is required");
    }
    RunConfig cfg = RunConfig::load(opts.config_path);
    if (!opts.out_override.empty()) {
        cfg.output_dir = opts.out_override;
    }
    if (opts.mock_backends) {
        cfg.force_mock_backends();
    }
    if (opts.seed_override) {
        cfg.training.rng_seed = *opts.seed_override;
    }
    cfg.validate(check_paths);
    return cfg;
}

void print_counts(const nlohmann::json& counts) {
    std::cout << counts.dump() << "\n";
}

int cmd_stage(const CliOptions& opts, const std::string& name) {
    RunConfig cfg = load_config(opts, true);
    PipelineRunner runner(cfg, opts.resume);
    DirLock lock(runner.paths());
    util::write_file_atomic(runner.paths().resolved_config(), cfg.to_json().dump(2) + "\n");
    if (name == kStageIngest) {
        print_counts(runner.stage_ingest());
    } else if (name == kStageGenQueries) {
        if (opts.dry_run) {
            // Show the exact prompts the generation stage would send.
            const Corpus corpus =
                ingest_corpus_jsonl(runner.paths().corpus(), cfg.pipeline.max_tokens,
                                    cfg.pipeline.tokenizer_spec)
                    .first;
            const PromptTemplate tmpl = cfg.generation_template();
            jsonl::for_each(runner.paths().seeds(), [&](const nlohmann::json& row, std::size_t) {
                const Document* doc = corpus.find(row.at("doc_id").get<std::string>());
                if (doc != nullptr) {
                    std::cout << "--- seed " << doc->doc_id << " ---\n"
                              << render_generation_prompt(tmpl, *doc) << "\n";
                }
            });
            return kExitOk;
        }
        print_counts(runner.stage_seeds());
        print_counts(runner.stage_genqueries());
    } else if (name == kStageIndex) {
        print_counts(runner.stage_index());
    } else if (name == kStageRetrieve) {
        print_counts(runner.stage_retrieve());
    } else if (name == kStageMine) {
        print_counts(runner.stage_mine());
    } else if (name == kStageSplit) {
        print_counts(runner.stage_split());
    }
    return kExitOk;
}

int cmd_pipeline(const CliOptions& opts) {
    RunConfig cfg = load_config(opts, true);
    PipelineRunner runner(cfg, opts.resume);
    const RunManifest manifest = runner.run();
    std::cout << manifest.to_json().dump(2) << "\n";
    return kExitOk;
}

Corpus load_corpus_for(const RunConfig& cfg, const RunPaths& paths) {
    return ingest_corpus_jsonl(paths.corpus(), cfg.pipeline.max_tokens,
                               cfg.pipeline.tokenizer_spec)
        .first;
}

int cmd_train(const CliOptions& opts) {
    RunConfig cfg = load_config(opts, true);
    PipelineRunner runner(cfg, opts.resume);
    DirLock lock(runner.paths());
    const RunPaths& paths = runner.paths();
    const Corpus corpus = load_corpus_for(cfg, paths);
    const auto triplets = read_triplets_jsonl(paths.train_set());

    CrossEncoderModel model(cfg.make_sequence_encoder(), cfg.stage_seed("head-init"));
    AdamState opt;
    TrainConfig tc;
    tc.epochs = cfg.training.epochs;
    tc.batch_size = cfg.training.batch_size;
    tc.grad_accum_steps = cfg.training.grad_accum_steps;
    tc.m = cfg.pipeline.m;
    tc.learning_rate = cfg.training.learning_rate;
    tc.rng_seed = cfg.stage_seed("train");
    const TrainingHistory history = train(model, triplets, corpus, tc, &opt);

    save_checkpoint(model, opt, cfg.fingerprint(), paths.checkpoint());
    write_history_jsonl(history, paths.history());
    for (const auto& record : history.epochs) {
        std::cout << "epoch " << record.epoch << " mean_loss " << record.mean_loss << "\n";
    }
    std::cout << "checkpoint " << paths.checkpoint().string() << "\n";
    return kExitOk;
}

std::vector<EvalQuery> load_out_domain_pools(const RunConfig& cfg) {
    const bool native = cfg.eval.out_domain_label_source == "native";
    auto pools = read_eval_pools_jsonl(cfg.eval.out_domain_pools, /*require_labels=*/native);
    if (!native) {
        auto backend = cfg.make_llm_backend();
        rescore_eval_pools(*backend, cfg.classification_template(), pools, cfg.pipeline.t,
                           cfg.pipeline.labels);
    }
    return pools;
}

int cmd_eval(const CliOptions& opts) {
    RunConfig cfg = load_config(opts, true);
    PipelineRunner runner(cfg, opts.resume);
    const RunPaths& paths = runner.paths();
    const Corpus corpus = load_corpus_for(cfg, paths);
    const auto ckpt = load_checkpoint(paths.checkpoint());

    const auto test = read_triplets_jsonl(paths.test_set());
    const auto pools = eval_queries_from_triplets(test, corpus);
    const MetricReport in_report =
        evaluate_model(ckpt.model, pools, cfg.eval.k, cfg.eval.max_pool, "in_domain");
    write_metric_report(in_report, paths.eval_report("in_domain"));
    std::cout << "in_domain n=" << in_report.n_queries << " map=" << in_report.aggregate.map
              << " mrr=" << in_report.aggregate.mrr << " ndcg=" << in_report.aggregate.ndcg
              << " (" << in_report.regime << ")\n";

    if (!cfg.eval.out_domain_pools.empty()) {
        const auto out_pools = load_out_domain_pools(cfg);
        const MetricReport out_report =
            evaluate_model(ckpt.model, out_pools, cfg.eval.k, cfg.eval.max_pool, "out_domain");
        write_metric_report(out_report, paths.eval_report("out_domain"));
        std::cout << "out_domain n=" << out_report.n_queries << " map=" << out_report.aggregate.map
                  << " mrr=" << out_report.aggregate.mrr << " ndcg=" << out_report.aggregate.ndcg
                  << " labels=" << cfg.eval.out_domain_label_source << " (" << out_report.regime
                  << ")\n";
    }
    return kExitOk;
}

int cmd_ablate(const CliOptions& opts) {
    RunConfig cfg = load_config(opts, true);
    PipelineRunner runner(cfg, opts.resume);
    DirLock lock(runner.paths());
    const RunPaths& paths = runner.paths();
    const Corpus corpus = load_corpus_for(cfg, paths);
    const auto train_set = read_triplets_jsonl(paths.train_set());
    const auto test_set = read_triplets_jsonl(paths.test_set());
    const auto in_pools = eval_queries_from_triplets(test_set, corpus);
    std::vector<EvalQuery> out_pools;
    if (!cfg.eval.out_domain_pools.empty()) {
        out_pools = load_out_domain_pools(cfg);
    }

    const AblationResult result = run_ablation(cfg, train_set, in_pools, out_pools, corpus);
    util::write_file_atomic(paths.ablation(), result.to_json().dump(2) + "\n");
    const auto files = emit_report(result, paths.root, "all");
    std::cout << "ablation sizes=" << result.sizes.size() << " epochs=" << result.epochs
              << " in_fingerprint=" << result.in_fingerprint << "\n";
    for (const auto& f : files) {
        std::cout << "report " << f.string() << "\n";
    }
    return kExitOk;
}

int cmd_report(const CliOptions& opts) {
    RunConfig cfg = load_config(opts, /*check_paths=*/false);
    RunPaths paths;
    paths.root = cfg.output_dir;
    const auto j = nlohmann::json::parse(util::read_file(paths.ablation()), nullptr, false);
    if (j.is_discarded()) {
        throw StateError("ablation artifact missing or malformed: " + paths.ablation().string());
    }
    const AblationResult result = AblationResult::from_json(j);
    for (const auto& f : emit_report(result, paths.root, opts.report_format)) {
        std::cout << "report " << f.string() << "\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthrank: query-less fine-tuning pipeline for cross-encoder rerankers"};
    app.require_subcommand(1);

    CliOptions opts;
    app.add_option("--config", opts.config_path, "Path to the run config JSON");
    app.add_option("--out", opts.out_override, "Override the config's output directory");
    app.add_flag("--resume", opts.resume, "Reuse existing stage artifacts instead of recomputing");
    app.add_flag("--mock-backends", opts.mock_backends,
                 "Force the deterministic offline backends");
    std::uint64_t seed_value = 0;
    auto* seed_opt = app.add_option("--seed", seed_value, "Override the master rng seed");

    auto* ingest = app.add_subcommand("ingest", "Load, filter and persist the corpus");
    auto* genqueries =
        app.add_subcommand("genqueries", "Sample seed documents and generate synthetic queries");
    genqueries->add_flag("--dry-run", opts.dry_run,
                         "Print the rendered generation prompts and exit");
    auto* index = app.add_subcommand("index", "Build the dense index over the corpus");
    auto* retrieve = app.add_subcommand("retrieve", "Retrieve top-k candidates per query");
    auto* mine = app.add_subcommand("mine", "Score candidates and assemble training triplets");
    auto* split = app.add_subcommand("split", "Split triplets into train and test sets");
    auto* train_cmd = app.add_subcommand("train", "Fine-tune the cross encoder on the train set");
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate the trained checkpoint");
    auto* ablate = app.add_subcommand("ablate", "Dataset-size ablation with per-epoch evaluation");
    auto* report = app.add_subcommand("report", "Render reports from a stored ablation result");
    report->add_option("--format", opts.report_format, "all | csv | json");
    auto* pipeline =
        app.add_subcommand("pipeline", "Run every dataset stage from ingest through split");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfigError;
    }

    if (*seed_opt) {
        opts.seed_override = seed_value;
    }

    try {
        if (*ingest) {
            return cmd_stage(opts, kStageIngest);
        }
        if (*genqueries) {
            return cmd_stage(opts, kStageGenQueries);
        }
        if (*index) {
            return cmd_stage(opts, kStageIndex);
        }
        if (*retrieve) {
            return cmd_stage(opts, kStageRetrieve);
        }
        if (*mine) {
            return cmd_stage(opts, kStageMine);
        }
        if (*split) {
            return cmd_stage(opts, kStageSplit);
        }
        if (*train_cmd) {
            return cmd_train(opts);
        }
        if (*eval_cmd) {
            return cmd_eval(opts);
        }
        if (*ablate) {
            return cmd_ablate(opts);
        }
        if (*report) {
            return cmd_report(opts);
        }
        if (*pipeline) {
            return cmd_pipeline(opts);
        }
        std::cerr << "no subcommand selected\n";
        return kExitConfigError;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const GatewayError& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return kExitBackendError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitStageFailure;
    }
}
