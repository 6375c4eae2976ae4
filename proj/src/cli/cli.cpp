#include "deconfound/cli/cli.hpp"

#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "deconfound/common.hpp"
#include "internal.hpp"

namespace dcfd::cli {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUnexpected = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct GlobalFlags {
    std::string config_path;
    std::string out = "out";
    std::uint64_t seed = 1;
    std::size_t jobs = 1;
    std::vector<std::string> overrides;
};

// Attaches the shared flag set to one subcommand; flags mirror config keys
// and win over the config file.
void attach_flags(CLI::App* cmd, GlobalFlags& flags) {
    cmd->add_option("--config", flags.config_path, "structured-text experiment config file");
    cmd->add_option("--out", flags.out, "output directory (default: out)");
    cmd->add_option("--seed", flags.seed, "master seed (default: 1)");
    cmd->add_option("--jobs", flags.jobs, "worker threads for independent runs (default: 1)");
    cmd->add_option("--set", flags.overrides,
                    "config override key=value (dotted keys descend; repeatable)");
}

Invocation make_invocation(const GlobalFlags& flags, const CLI::App* cmd) {
    Invocation inv;
    inv.config = flags.config_path.empty() ? ordered_json::object()
                                           : load_config_file(flags.config_path);
    for (const std::string& assignment : flags.overrides)
        apply_override(inv.config, assignment);
    // Dedicated flags land in the config too so the hash covers them.
    if (cmd->count("--seed") || !inv.config.contains("seed"))
        inv.config["seed"] = flags.seed;
    if (cmd->count("--jobs") || !inv.config.contains("jobs"))
        inv.config["jobs"] = flags.jobs;
    inv.seed = inv.config.at("seed").get<std::uint64_t>();
    inv.jobs = inv.config.at("jobs").get<std::size_t>();
    inv.out = flags.out;
    inv.config_hash = hash_of_config(inv.config);
    return inv;
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"adversarial confound removal for multimodal sequence classification"};
    app.require_subcommand(1);

    GlobalFlags flags;
    CLI::App* synthesize =
        app.add_subcommand("synthesize", "generate a confounded synthetic corpus");
    CLI::App* featurize =
        app.add_subcommand("featurize", "extract and normalize acoustic/lexical features");
    CLI::App* train = app.add_subcommand("train", "train one variant or a full grid on a fold");
    CLI::App* evaluate =
        app.add_subcommand("evaluate", "run recorded checkpoints on another manifest");
    CLI::App* analyze = app.add_subcommand("analyze", "run one research-question analysis");
    for (CLI::App* cmd : {synthesize, featurize, train, evaluate, analyze})
        attach_flags(cmd, flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // --help and friends exit 0 through CLI11's own printer.
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (synthesize->parsed()) return cmd_synthesize(make_invocation(flags, synthesize));
        if (featurize->parsed()) return cmd_featurize(make_invocation(flags, featurize));
        if (train->parsed()) return cmd_train(make_invocation(flags, train));
        if (evaluate->parsed()) return cmd_evaluate(make_invocation(flags, evaluate));
        if (analyze->parsed()) return cmd_analyze(make_invocation(flags, analyze));
        std::cerr << "error: config: no command given\n";
        return kExitConfig;
    } catch (const ConfigError& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DataError& e) {
        std::cerr << "error: data: " << e.what() << "\n";
        return kExitData;
    } catch (const NumericError& e) {
        std::cerr << "error: numeric: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: unexpected: " << e.what() << "\n";
        return kExitUnexpected;
    }
}

}  // namespace dcfd::cli
