// CLI tests: config plumbing (overrides, hashing, file loading, spec
// parsing) plus end-to-end subcommand runs through the public entry point,
// including the documented exit-code mapping and artifact determinism.
#include <doctest.h>

#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "deconfound/cli/cli.hpp"
#include "deconfound/common.hpp"
#include "deconfound/data/manifest.hpp"
#include "../../src/cli/internal.hpp"

using namespace dcfd;
using cli::ordered_json;

namespace {

std::filesystem::path temp_dir() {
    static int counter = 0;
    auto dir = std::filesystem::temp_directory_path() /
               ("dcfd_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(dir);
    return dir;
}

int run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.push_back("deconfound");
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli::run(static_cast<int>(argv.size()), argv.data());
}

void write_json(const std::filesystem::path& path, const ordered_json& j) {
    std::ofstream f(path);
    f << j.dump(2) << "\n";
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    return std::string((std::istreambuf_iterator<char>(f)), {});
}

std::size_t count_lines(const std::string& text) {
    std::size_t n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

// A small corpus block that trains quickly but keeps every class populated
// in speaker-independent splits.
ordered_json small_corpus_block() {
    ordered_json corpus;
    corpus["speakers"] = 10;
    corpus["utterances_per_speaker"] = 4;
    corpus["acoustic_dim"] = 4;
    corpus["min_frames"] = 6;
    corpus["max_frames"] = 8;
    corpus["min_tokens"] = 4;
    corpus["max_tokens"] = 6;
    corpus["correlation"] = 0.5;
    corpus["acoustic_shift"] = 0.5;
    corpus["emotion_signal"] = 1.0;
    corpus["noise_scale"] = 0.5;
    return corpus;
}

ordered_json tiny_spec_block() {
    ordered_json spec;
    spec["acoustic"] = {{"conv_layers", 1}, {"kernel_width", 2}, {"conv_width", 4},
                        {"pool_width", 2}, {"gru_layers", 1},   {"gru_width", 4}};
    spec["head"] = {{"dense_layers", 1}, {"dense_width", 4}};
    return spec;
}

ordered_json tiny_train_block() {
    ordered_json train;
    train["max_epochs"] = 2;
    train["patience"] = 2;
    train["batch_size"] = 8;
    train["seeds"] = {1};
    return train;
}

}  // namespace

TEST_CASE("apply_override descends dotted keys and parses JSON values") {
    ordered_json config = ordered_json::object();
    cli::apply_override(config, "corpus.speakers=12");
    CHECK(config["corpus"]["speakers"] == 12);

    cli::apply_override(config, "corpus.correlation=0.75");
    CHECK(config["corpus"]["correlation"] == 0.75);

    cli::apply_override(config, "train.seeds=[1,2,3]");
    CHECK(config["train"]["seeds"] == ordered_json::array({1, 2, 3}));

    cli::apply_override(config, "grid=true");
    CHECK(config["grid"] == true);

    // Unparseable values fall back to literal strings.
    cli::apply_override(config, "manifest=out/manifest.jsonl");
    CHECK(config["manifest"] == "out/manifest.jsonl");

    // Overwrites and deep creation.
    cli::apply_override(config, "corpus.speakers=3");
    CHECK(config["corpus"]["speakers"] == 3);
    cli::apply_override(config, "a.b.c=1");
    CHECK(config["a"]["b"]["c"] == 1);

    // A scalar in the middle of the path is replaced by an object.
    cli::apply_override(config, "grid.inner=2");
    CHECK(config["grid"]["inner"] == 2);

    CHECK_THROWS_AS(cli::apply_override(config, "novalue"), ConfigError);
    CHECK_THROWS_AS(cli::apply_override(config, "=5"), ConfigError);
    CHECK_THROWS_AS(cli::apply_override(config, "a..b=5"), ConfigError);
}

TEST_CASE("hash_of_config is key-order independent and value sensitive") {
    ordered_json a = ordered_json::object();
    a["zeta"] = 1;
    a["alpha"] = ordered_json{{"y", 2}, {"x", 3}};
    ordered_json b = ordered_json::object();
    b["alpha"] = ordered_json{{"x", 3}, {"y", 2}};
    b["zeta"] = 1;

    const std::string ha = cli::hash_of_config(a);
    const std::string hb = cli::hash_of_config(b);
    CHECK(ha == hb);
    CHECK(ha.size() == 16);
    for (char c : ha) CHECK(std::string("0123456789abcdef").find(c) != std::string::npos);

    b["zeta"] = 2;
    CHECK(cli::hash_of_config(b) != ha);
}

TEST_CASE("load_config_file validates existence, syntax, and root type") {
    const auto dir = temp_dir();
    write_json(dir / "good.json", ordered_json{{"k", 1}});
    const auto loaded = cli::load_config_file(dir / "good.json");
    CHECK(loaded["k"] == 1);

    CHECK_THROWS_AS(cli::load_config_file(dir / "absent.json"), ConfigError);
    std::ofstream(dir / "bad.json") << "{broken";
    CHECK_THROWS_AS(cli::load_config_file(dir / "bad.json"), ConfigError);
    std::ofstream(dir / "array.json") << "[1,2]";
    CHECK_THROWS_AS(cli::load_config_file(dir / "array.json"), ConfigError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("require and require_string raise config errors with the key name") {
    const ordered_json config{{"name", "x"}, {"n", 5}};
    CHECK(cli::require_string(config, "name") == "x");
    CHECK_THROWS_WITH_AS(cli::require(config, "missing"), "config key missing: missing",
                         ConfigError);
    CHECK_THROWS_WITH_AS(cli::require_string(config, "n"), "config key n must be a string",
                         ConfigError);
}

TEST_CASE("parse_corpus fills defaults and rejects malformed values") {
    const ordered_json empty = ordered_json::object();
    const auto defaults = cli::parse_corpus(empty, 9);
    CHECK(defaults.speakers == 40);
    CHECK(defaults.seed == 9);  // invocation seed backfills the corpus seed

    ordered_json j;
    j["speakers"] = 7;
    j["correlation"] = 0.4;
    j["spontaneity_confound"] = true;
    j["confound_priors"] = {0.5, 0.5};
    j["seed"] = 123;
    const auto parsed = cli::parse_corpus(j, 9);
    CHECK(parsed.speakers == 7);
    CHECK(parsed.correlation == 0.4);
    CHECK(parsed.spontaneity_confound);
    REQUIRE(parsed.confound_priors.size() == 2);
    CHECK(parsed.seed == 123);  // explicit seed wins

    ordered_json bad;
    bad["speakers"] = "several";
    CHECK_THROWS_AS(cli::parse_corpus(bad, 1), ConfigError);
    CHECK_THROWS_AS(cli::parse_corpus(ordered_json("not an object"), 1), ConfigError);
}

TEST_CASE("parse_train_config reads the train block") {
    ordered_json config;
    config["train"] = ordered_json{{"max_epochs", 7},      {"patience", 3},
                                   {"batch_size", 16},     {"learning_rate", 5e-4},
                                   {"seeds", {4, 5}},      {"chance_uar_tolerance", 0.1}};
    const auto tc = cli::parse_train_config(config, 3);
    CHECK(tc.max_epochs == 7);
    CHECK(tc.patience == 3);
    CHECK(tc.batch_size == 16);
    CHECK(tc.optimizer.learning_rate == 5e-4);
    CHECK(tc.chance_uar_tolerance == 0.1);
    CHECK(tc.seeds == std::vector<std::uint64_t>{4, 5});
    CHECK(tc.jobs == 3);

    // The paper recipe is the default.
    const auto defaults = cli::parse_train_config(ordered_json::object(), 1);
    CHECK(defaults.max_epochs == 50);
    CHECK(defaults.patience == 5);
    CHECK(defaults.optimizer.learning_rate == 1e-3);
    CHECK(defaults.optimizer.decay == 0.9);
    CHECK(defaults.seeds == std::vector<std::uint64_t>{1, 2, 3});

    ordered_json bad;
    bad["train"] = ordered_json{{"seeds", ordered_json::array()}};
    CHECK_THROWS_AS(cli::parse_train_config(bad, 1), ConfigError);
}

TEST_CASE("parse_spec fills input dims from the data and validates streams") {
    ordered_json config;
    config["modality"] = "multimodal";
    config["target"] = "valence";
    config["spec"] = tiny_spec_block();
    config["spec"]["lexical"] = config["spec"]["acoustic"];

    const auto spec =
        cli::parse_spec(config, model::TrainingMode::normal, std::nullopt, 40, 300);
    CHECK(spec.target == model::EmotionTarget::valence);
    CHECK(spec.modality == model::Modality::multimodal);
    REQUIRE(spec.acoustic.has_value());
    REQUIRE(spec.lexical.has_value());
    CHECK(spec.acoustic->input_dim == 40);  // filled from the data
    CHECK(spec.lexical->input_dim == 300);
    CHECK(!spec.lambda.has_value());

    // Adversarial specs default lambda to 0.6 when the config has none.
    ordered_json adv = config;
    adv["modality"] = "acoustic";
    const auto with_default =
        cli::parse_spec(adv, model::TrainingMode::adversarial, std::nullopt, 40, 0);
    REQUIRE(with_default.lambda.has_value());
    CHECK(*with_default.lambda == 0.6);
    const auto with_explicit =
        cli::parse_spec(adv, model::TrainingMode::adversarial, 0.3, 40, 0);
    CHECK(*with_explicit.lambda == 0.3);

    // Requesting a stream the data cannot feed.
    CHECK_THROWS_AS(cli::parse_spec(config, model::TrainingMode::normal, std::nullopt, 0, 300),
                    ConfigError);
    CHECK_THROWS_AS(cli::parse_spec(config, model::TrainingMode::normal, std::nullopt, 40, 0),
                    ConfigError);
}

TEST_CASE("analysis candidate lists cover the lambda grid") {
    ordered_json config;
    config["modality"] = "acoustic";
    config["spec"] = tiny_spec_block();

    const auto normal = cli::analysis_normal_candidates(config, 4, 0);
    REQUIRE(normal.size() == 1);
    CHECK(normal[0].mode == model::TrainingMode::normal);

    const auto adversarial = cli::analysis_adversarial_candidates(config, 4, 0);
    REQUIRE(adversarial.size() == 3);
    CHECK(*adversarial[0].lambda == 0.3);
    CHECK(*adversarial[1].lambda == 0.6);
    CHECK(*adversarial[2].lambda == 0.8);

    config["lambda_grid"] = {0.8};
    const auto custom = cli::analysis_adversarial_candidates(config, 4, 0);
    REQUIRE(custom.size() == 1);
    CHECK(*custom[0].lambda == 0.8);

    config["lambda_grid"] = ordered_json::array();
    CHECK_THROWS_AS(cli::analysis_adversarial_candidates(config, 4, 0), ConfigError);
}

TEST_CASE("cli rejects missing subcommands and honors --help") {
    CHECK(run_cli({}) == 2);
    CHECK(run_cli({"--help"}) == 0);
    CHECK(run_cli({"synthesize", "--help"}) == 0);
    CHECK(run_cli({"no-such-command"}) == 2);
    // Unknown flag on a real subcommand.
    CHECK(run_cli({"synthesize", "--bogus"}) == 2);
}

TEST_CASE("synthesize-train-evaluate pipeline runs end to end") {
    const auto dir = temp_dir();
    const auto corpus_out = (dir / "corpus").string();

    ordered_json synth_cfg;
    synth_cfg["corpus"] = small_corpus_block();
    synth_cfg["embedding_dim"] = 3;
    write_json(dir / "synth.json", synth_cfg);

    REQUIRE(run_cli({"synthesize", "--config", (dir / "synth.json").string(), "--out",
                     corpus_out, "--seed", "3"}) == 0);
    CHECK(std::filesystem::exists(dir / "corpus" / "manifest.jsonl"));
    CHECK(std::filesystem::exists(dir / "corpus" / "embeddings.txt"));
    CHECK(std::filesystem::exists(dir / "corpus" / "config.lock.json"));

    // 10 speakers x 4 utterances = 40 manifest lines.
    const std::string manifest = slurp(dir / "corpus" / "manifest.jsonl");
    CHECK(count_lines(manifest) == 40);

    // The lock records the stamped config and its hash.
    const auto lock = nlohmann::json::parse(slurp(dir / "corpus" / "config.lock.json"));
    REQUIRE(lock.contains("config_hash"));
    REQUIRE(lock.contains("config"));
    CHECK(lock["config"]["seed"] == 3);
    CHECK(lock["config_hash"] ==
          cli::hash_of_config(cli::ordered_json::parse(lock["config"].dump())));

    // Same invocation, fresh output directory: byte-identical corpus.
    REQUIRE(run_cli({"synthesize", "--config", (dir / "synth.json").string(), "--out",
                     (dir / "corpus_b").string(), "--seed", "3"}) == 0);
    CHECK(slurp(dir / "corpus_b" / "manifest.jsonl") == manifest);

    // A different seed produces a different corpus.
    REQUIRE(run_cli({"synthesize", "--config", (dir / "synth.json").string(), "--out",
                     (dir / "corpus_c").string(), "--seed", "4"}) == 0);
    CHECK(slurp(dir / "corpus_c" / "manifest.jsonl") != manifest);

    // --set overrides reach the generator.
    REQUIRE(run_cli({"synthesize", "--config", (dir / "synth.json").string(), "--out",
                     (dir / "corpus_d").string(), "--seed", "3", "--set",
                     "corpus.speakers=2"}) == 0);
    CHECK(count_lines(slurp(dir / "corpus_d" / "manifest.jsonl")) == 8);

    // Train a tiny normal acoustic model on the corpus.
    ordered_json train_cfg;
    train_cfg["manifest"] = (dir / "corpus" / "manifest.jsonl").string();
    train_cfg["mode"] = "normal";
    train_cfg["modality"] = "acoustic";
    train_cfg["folds"] = 3;
    train_cfg["fold"] = 0;
    train_cfg["spec"] = tiny_spec_block();
    train_cfg["train"] = tiny_train_block();
    write_json(dir / "train.json", train_cfg);

    REQUIRE(run_cli({"train", "--config", (dir / "train.json").string(), "--out",
                     (dir / "run").string()}) == 0);
    const auto ledger_path = dir / "run" / "runs.jsonl";
    REQUIRE(std::filesystem::exists(ledger_path));
    const auto entries = train::read_run_ledger(ledger_path);
    REQUIRE(entries.size() == 1);  // one seed
    CHECK(entries[0].mode == "normal");
    REQUIRE(!entries[0].checkpoint.empty());
    CHECK(std::filesystem::exists(dir / "run" / entries[0].checkpoint));

    // Training twice is byte-deterministic (ledger and checkpoint).
    REQUIRE(run_cli({"train", "--config", (dir / "train.json").string(), "--out",
                     (dir / "run_b").string()}) == 0);
    CHECK(slurp(dir / "run_b" / "runs.jsonl") == slurp(ledger_path));
    CHECK(slurp(dir / "run_b" / entries[0].checkpoint) ==
          slurp(dir / "run" / entries[0].checkpoint));

    // Evaluate the trained run on its own corpus.
    ordered_json eval_cfg;
    eval_cfg["ledger"] = ledger_path.string();
    eval_cfg["manifest"] = (dir / "corpus" / "manifest.jsonl").string();
    write_json(dir / "eval.json", eval_cfg);
    REQUIRE(run_cli({"evaluate", "--config", (dir / "eval.json").string(), "--out",
                     (dir / "eval").string()}) == 0);
    CHECK(std::filesystem::exists(dir / "eval" / "evaluation.txt"));
    const auto report = nlohmann::json::parse(slurp(dir / "eval" / "evaluation.json"));
    REQUIRE(report.contains("runs"));
    REQUIRE(report.contains("ensembles"));
    CHECK(report["runs"].size() == 1);
    std::filesystem::remove_all(dir);
}

TEST_CASE("cli maps error kinds to the documented exit codes") {
    const auto dir = temp_dir();

    // Config errors -> 2.
    CHECK(run_cli({"synthesize", "--config", (dir / "absent.json").string()}) == 2);
    write_json(dir / "no_manifest.json", ordered_json{{"mode", "normal"}});
    CHECK(run_cli({"train", "--config", (dir / "no_manifest.json").string(), "--out",
                   (dir / "o1").string()}) == 2);

    // Data errors -> 3.
    write_json(dir / "ghost_manifest.json",
               ordered_json{{"manifest", (dir / "ghost.jsonl").string()}});
    CHECK(run_cli({"train", "--config", (dir / "ghost_manifest.json").string(), "--out",
                   (dir / "o2").string()}) == 3);

    // Numeric failures -> 4: an exploding learning rate makes RMSProp
    // produce non-finite parameters on the first step.
    ordered_json synth_cfg;
    synth_cfg["corpus"] = small_corpus_block();
    write_json(dir / "synth.json", synth_cfg);
    REQUIRE(run_cli({"synthesize", "--config", (dir / "synth.json").string(), "--out",
                     (dir / "corpus").string(), "--seed", "3"}) == 0);

    ordered_json train_cfg;
    train_cfg["manifest"] = (dir / "corpus" / "manifest.jsonl").string();
    train_cfg["mode"] = "normal";
    train_cfg["modality"] = "acoustic";
    train_cfg["folds"] = 3;
    train_cfg["spec"] = tiny_spec_block();
    train_cfg["train"] = tiny_train_block();
    write_json(dir / "train.json", train_cfg);
    CHECK(run_cli({"train", "--config", (dir / "train.json").string(), "--out",
                   (dir / "o3").string(), "--set", "train.learning_rate=1e308"}) == 4);

    // Analyze requires a question.
    write_json(dir / "noq.json", ordered_json::object());
    CHECK(run_cli({"analyze", "--config", (dir / "noq.json").string(), "--out",
                   (dir / "o4").string()}) == 2);
    write_json(dir / "badq.json", ordered_json{{"question", "q99"}});
    CHECK(run_cli({"analyze", "--config", (dir / "badq.json").string(), "--out",
                   (dir / "o5").string()}) == 2);
    std::filesystem::remove_all(dir);
}

TEST_CASE("featurize normalizes inline tensors and emits lexical rates") {
    const auto dir = temp_dir();
    ordered_json synth_cfg;
    synth_cfg["corpus"] = small_corpus_block();
    write_json(dir / "synth.json", synth_cfg);
    REQUIRE(run_cli({"synthesize", "--config", (dir / "synth.json").string(), "--out",
                     (dir / "corpus").string(), "--seed", "3"}) == 0);

    ordered_json feat_cfg;
    feat_cfg["manifest"] = (dir / "corpus" / "manifest.jsonl").string();
    feat_cfg["lexicon"] = std::string(DCFD_ASSET_DIR) + "/lexicon_small.txt";
    write_json(dir / "feat.json", feat_cfg);
    REQUIRE(run_cli({"featurize", "--config", (dir / "feat.json").string(), "--out",
                     (dir / "features").string()}) == 0);

    REQUIRE(std::filesystem::exists(dir / "features" / "manifest.jsonl"));
    REQUIRE(std::filesystem::exists(dir / "features" / "lexical.jsonl"));

    // The featurized manifest loads and its tensors are per-session
    // z-normalized: pooled mean ~0 within each session.
    const auto utts =
        data::read_manifest((dir / "features" / "manifest.jsonl").string(), true);
    REQUIRE(!utts.empty());
    std::map<std::string, std::pair<double, std::size_t>> by_session;
    for (const auto& u : utts) {
        REQUIRE(u.acoustic.has_value());
        auto& [sum, n] = by_session[u.session_id];
        for (double v : u.acoustic->values()) {
            sum += v;
            n += 1;
        }
    }
    for (const auto& [session, acc] : by_session)
        CHECK(std::abs(acc.first / static_cast<double>(acc.second)) < 1e-9);

    // One lexical row per utterance, keyed by id, with the fixed categories.
    const std::string lex = slurp(dir / "features" / "lexical.jsonl");
    CHECK(count_lines(lex) == utts.size());
    const auto first = nlohmann::json::parse(lex.substr(0, lex.find('\n')));
    CHECK(first.contains("id"));
    CHECK(first.contains("fillers"));
    CHECK(first.contains("adverb"));
    std::filesystem::remove_all(dir);
}
