// Copyright (C) 2026 the synthrank authors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end checks of the installed CLI binary: subcommand chain, exit
// codes, and artifact presence. The binary path comes from the build.

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <string>

#include "support/test_support.hpp"
#include "synthrank/metrics.hpp"
#include "synthrank/pipeline.hpp"
#include "synthrank/util.hpp"

using namespace synthrank;

namespace {

struct CommandResult {
    int exit_code = -1;
    std::string output;
};

CommandResult run_cli(const std::string& args, const std::filesystem::path& capture_dir) {
    static int counter = 0;
    const auto capture = capture_dir / ("cli-out-" + std::to_string(counter++) + ".txt");
    const std::string cmd =
        std::string(SYNTHRANK_CLI_PATH) + " " + args + " > " + capture.string() + " 2>&1";
    const int raw = std::system(cmd.c_str());
    CommandResult result;
    result.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    if (std::filesystem::exists(capture)) {
        result.output = util::read_file(capture);
    }
    return result;
}

/// Desk corpus plus a config file sized for fast subprocess runs.
struct CliFixture {
    synthtest::TempDir dir{"cli"};
    std::filesystem::path config_path;
    std::filesystem::path out_dir;

    CliFixture() {
        const auto corpus_path = dir / "corpus.jsonl";
        synthtest::write_corpus_file(synthtest::make_synthetic_corpus({40, 10}), corpus_path);

        const auto pools_path = dir / "out_domain.jsonl";
        write_eval_pools_jsonl(synthtest::make_out_domain_pools(8, 10), pools_path);

        out_dir = dir / "out";
        RunConfig cfg = synthtest::make_mock_config(corpus_path, out_dir);
        cfg.pipeline.n_seeds = 30;
        cfg.eval.test_size = 8;
        cfg.training.epochs = 2;
        cfg.eval.out_domain_pools = pools_path;
        cfg.ablation.sizes = {6, 12};
        config_path = dir / "config.json";
        util::write_file_atomic(config_path, cfg.to_json().dump(2) + "\n");
    }
};

const CliFixture& cli_fixture() {
    static CliFixture f;
    return f;
}

}  // namespace

TEST_CASE("cli pipeline run succeeds and writes the manifest") {
    const auto& f = cli_fixture();
    const auto result = run_cli("pipeline --config " + f.config_path.string(), f.dir.path());
    CHECK(result.exit_code == 0);
    RunPaths paths;
    paths.root = f.out_dir;
    CHECK(std::filesystem::exists(paths.manifest()));
    CHECK(std::filesystem::exists(paths.triplets()));
    CHECK(result.output.find("\"status\": \"ok\"") != std::string::npos);
}

TEST_CASE("cli train, eval, ablate and report chain") {
    const auto& f = cli_fixture();
    RunPaths paths;
    paths.root = f.out_dir;
    REQUIRE(std::filesystem::exists(paths.train_set()));  // pipeline test ran first

    const auto train_result = run_cli("train --config " + f.config_path.string(), f.dir.path());
    CHECK(train_result.exit_code == 0);
    CHECK(std::filesystem::exists(paths.checkpoint()));
    CHECK(std::filesystem::exists(paths.history()));

    const auto eval_result = run_cli("eval --config " + f.config_path.string(), f.dir.path());
    CHECK(eval_result.exit_code == 0);
    CHECK(std::filesystem::exists(paths.eval_report("in_domain")));
    CHECK(std::filesystem::exists(paths.eval_report("out_domain")));
    CHECK(eval_result.output.find("in_domain") != std::string::npos);

    const auto ablate_result = run_cli("ablate --config " + f.config_path.string(), f.dir.path());
    CHECK(ablate_result.exit_code == 0);
    CHECK(std::filesystem::exists(paths.ablation()));
    CHECK(std::filesystem::exists(f.out_dir / "per_epoch.csv"));
    CHECK(std::filesystem::exists(f.out_dir / "first_epoch_table.csv"));
    CHECK(std::filesystem::exists(f.out_dir / "series.json"));

    std::filesystem::remove(f.out_dir / "series.json");
    const auto report_result = run_cli(
        "report --config " + f.config_path.string() + " --format json", f.dir.path());
    CHECK(report_result.exit_code == 0);
    CHECK(std::filesystem::exists(f.out_dir / "series.json"));
}

TEST_CASE("cli dry-run prints rendered generation prompts") {
    const auto& f = cli_fixture();
    const auto result = run_cli(
        "genqueries --dry-run --resume --config " + f.config_path.string(), f.dir.path());
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("Document:") != std::string::npos);
    CHECK(result.output.find("Query:") != std::string::npos);
}

TEST_CASE("cli maps error classes to exit codes") {
    const auto& f = cli_fixture();

    // Missing --config.
    CHECK(run_cli("pipeline", f.dir.path()).exit_code == 2);
    // Nonexistent config file.
    CHECK(run_cli("pipeline --config /nonexistent/cfg.json", f.dir.path()).exit_code == 2);
    // Unknown subcommand.
    CHECK(run_cli("frobnicate --config " + f.config_path.string(), f.dir.path()).exit_code == 2);

    // Structurally invalid config value.
    const auto bad_cfg = f.dir / "bad.json";
    util::write_file_atomic(bad_cfg, R"({"corpus_path": "x", "pipeline": {"t": 2.0}})");
    CHECK(run_cli("pipeline --config " + bad_cfg.string(), f.dir.path()).exit_code == 2);

    // Unreachable backend surfaces as a backend error.
    RunConfig cfg = RunConfig::load(f.config_path);
    cfg.output_dir = f.dir / "dead-out";
    cfg.llm.kind = "http";
    cfg.llm.http.base_url = "http://127.0.0.1:9";
    cfg.llm.http.max_retries = 0;
    cfg.llm.http.timeout_ms = 200;
    const auto dead_cfg = f.dir / "dead.json";
    util::write_file_atomic(dead_cfg, cfg.to_json().dump(2) + "\n");
    CHECK(run_cli("pipeline --config " + dead_cfg.string(), f.dir.path()).exit_code == 3);

    // Stage failure: split without any upstream artifacts.
    RunConfig cfg2 = RunConfig::load(f.config_path);
    cfg2.output_dir = f.dir / "empty-out";
    const auto stage_cfg = f.dir / "stage.json";
    util::write_file_atomic(stage_cfg, cfg2.to_json().dump(2) + "\n");
    CHECK(run_cli("split --config " + stage_cfg.string(), f.dir.path()).exit_code == 4);
}

TEST_CASE("cli stage commands run individually with --resume") {
    const auto& f = cli_fixture();
    synthtest::TempDir staged("cli-staged");
    RunConfig cfg = RunConfig::load(f.config_path);
    cfg.output_dir = staged / "out";
    const auto cfg_path = staged / "config.json";
    util::write_file_atomic(cfg_path, cfg.to_json().dump(2) + "\n");
    const std::string base = " --config " + cfg_path.string();

    CHECK(run_cli("ingest" + base, staged.path()).exit_code == 0);
    CHECK(run_cli("genqueries" + base + " --resume", staged.path()).exit_code == 0);
    CHECK(run_cli("index" + base + " --resume", staged.path()).exit_code == 0);
    CHECK(run_cli("retrieve" + base + " --resume", staged.path()).exit_code == 0);
    CHECK(run_cli("mine" + base + " --resume", staged.path()).exit_code == 0);
    CHECK(run_cli("split" + base + " --resume", staged.path()).exit_code == 0);

    RunPaths paths;
    paths.root = cfg.output_dir;
    CHECK(std::filesystem::exists(paths.train_set()));
    CHECK(std::filesystem::exists(paths.test_set()));
}
