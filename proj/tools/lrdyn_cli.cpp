// lrdyn: run configured experiments and list the built-in presets.
//
//   lrdyn run <config.json | preset> [--out dir] [--threads n] [--seed u64]
//   lrdyn presets [--show name]
//
// Exit status: 0 all asserted properties hold, 1 some property failed,
// 2 configuration or resource error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "lrdyn/experiments.hpp"

namespace
{
    constexpr int EXIT_PROPERTY = 1;
    constexpr int EXIT_CONFIG = 2;

    lrdyn::ExperimentConfig resolve(const std::string& what)
    {
        if (std::filesystem::exists(what))
            return lrdyn::load_config(what);
        if (const auto* p = lrdyn::find_preset(what))
            return lrdyn::parse_config(p->json);
        throw lrdyn::ConfigError("<config>", "'" + what + "' is neither a readable file nor a preset name");
    }

    int run(const std::string& what, const std::string& out_dir, std::optional<int> threads,
            std::optional<std::uint64_t> seed)
    {
        auto cfg = resolve(what);
        if (threads)
            cfg.threads = *threads;
        if (seed)
            cfg.seed = *seed;

        const auto result = lrdyn::run_experiment(cfg);
        for (const auto& w : result.warnings)
            std::cerr << "warning: " << w << "\n";
        const auto files = lrdyn::write_outputs(result, cfg, out_dir);

        std::cout << cfg.name << " (" << result.kind << ")\n";
        for (const auto& c : result.checks)
            std::cout << (c.pass ? "  PASS " : "  FAIL ") << c.name << ": " << c.detail << "\n";
        for (const auto& f : files)
            std::cout << "  wrote " << f.string() << "\n";
        return result.all_pass() ? EXIT_SUCCESS : EXIT_PROPERTY;
    }
} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"finite-volume long-range fermion dynamics experiments"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string out_dir = "out";
    if (const char* env = std::getenv("LRDYN_OUT"))
        out_dir = env;
    std::optional<int> threads;
    std::optional<std::uint64_t> seed;
    app.add_option("--out", out_dir, "output directory (default: $LRDYN_OUT or ./out)");
    app.add_option("--threads", threads, "worker threads")->check(CLI::Range(1, 256));
    app.add_option("--seed", seed, "random seed, overrides the config");

    auto* run_cmd = app.add_subcommand("run", "run a config file or a preset by name");
    std::string target;
    run_cmd->add_option("config", target, "config file or preset name")->required();

    auto* presets_cmd = app.add_subcommand("presets", "list the built-in presets");
    std::string show;
    presets_cmd->add_option("--show", show, "print the config of one preset");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : EXIT_CONFIG;
    }

    try
    {
        if (*presets_cmd)
        {
            if (!show.empty())
            {
                const auto* p = lrdyn::find_preset(show);
                if (!p)
                    throw lrdyn::ConfigError("--show", "unknown preset '" + show + "'");
                std::cout << p->json << "\n";
                return EXIT_SUCCESS;
            }
            for (const auto& p : lrdyn::presets())
                std::cout << p.name << "  [" << p.budget << "]  " << p.description << "\n";
            return EXIT_SUCCESS;
        }
        return run(target, out_dir, threads, seed);
    }
    catch (const lrdyn::ConfigError& e)
    {
        std::cerr << "config error: " << e.what() << "\n";
        return EXIT_CONFIG;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return EXIT_CONFIG;
    }
}
