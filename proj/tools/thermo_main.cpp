#include "thermo/errors.hpp"
#include "thermo/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <string>

namespace {

int run_stage(const std::string& stage, const thermo::PipelineConfig& cfg) {
    if (stage == "phantom")
        thermo::cmd_phantom(cfg);
    else if (stage == "factorize")
        thermo::cmd_factorize(cfg);
    else if (stage == "embed")
        thermo::cmd_embed(cfg);
    else if (stage == "features")
        thermo::cmd_features(cfg);
    else if (stage == "select")
        thermo::cmd_select(cfg);
    else if (stage == "classify")
        thermo::cmd_classify(cfg);
    else if (stage == "sweep")
        thermo::cmd_sweep(cfg);
    else
        thermo::cmd_pipeline(cfg);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"thermographic diagnosis pipeline: factorize, embed, extract features, "
                 "select, classify"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    app.add_option("-c,--config", config_path, "pipeline config JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    std::uint64_t seed = 0;
    auto* seed_opt = app.add_option("--seed", seed, "override the config root seed");
    std::string out_dir;
    auto* out_opt = app.add_option("--out", out_dir, "override the config output directory");
    int jobs = 0;
    auto* jobs_opt = app.add_option("--jobs", jobs, "parallel workers for per-case stages");

    app.add_subcommand("phantom", "generate the synthetic cohort");
    app.add_subcommand("factorize", "low-rank factorization per case");
    app.add_subcommand("embed", "collapse factorizations into avatar images");
    app.add_subcommand("features", "extract the 300-entry thermomic vector per case");
    app.add_subcommand("select", "block HSIC lasso feature selection");
    app.add_subcommand("classify", "random-forest leave-one-out evaluation");
    app.add_subcommand("sweep", "noise robustness sweep across methods");
    app.add_subcommand("pipeline", "run every stage in order");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        thermo::PipelineConfig cfg = thermo::load_config(config_path);
        if (*seed_opt) cfg.seed = seed;
        if (*out_opt) cfg.output_dir = out_dir;
        if (*jobs_opt) {
            if (jobs < 1) throw thermo::ConfigInvalid("--jobs must be >= 1");
            cfg.jobs = jobs;
        }
        return run_stage(app.get_subcommands().front()->get_name(), cfg);
    } catch (const thermo::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const thermo::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const thermo::NumericalError& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
