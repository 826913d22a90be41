#include <CLI11.hpp>

#include <cstdio>
#include <string>
#include <vector>

#include "udavi/artifacts.hpp"
#include "udavi/config.hpp"
#include "udavi/runner.hpp"

namespace {

udavi::ExperimentConfig load_config(const std::string& path, uint64_t seed_override,
                                    const std::string& out_override) {
    udavi::ExperimentConfig cfg = udavi::ExperimentConfig::from_file(path);
    if (seed_override != 0) cfg.train.seed = seed_override;
    if (!out_override.empty()) cfg.out_dir = out_override;
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Amortized single-pass posterior sampler for linear imaging inverse problems"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;
    uint64_t seed_override = 0;
    app.add_option("--config", config_path, "Experiment config JSON")->required();
    app.add_option("--seed", seed_override, "Override train.seed (0 keeps the config value)");
    app.add_option("--out", out_override, "Override the output directory");

    CLI::App* train = app.add_subcommand("train", "Run the two-stage training pipeline");

    CLI::App* infer = app.add_subcommand("infer", "Draw posterior samples from a checkpoint");
    std::string ckpt_path, measurements_dir, infer_out;
    int infer_seeds = 1;
    infer->add_option("--checkpoint", ckpt_path, "Checkpoint path")->required();
    infer->add_option("--measurements", measurements_dir, "Measurement set directory")->required();
    infer->add_option("--seeds", infer_seeds, "Posterior samples per measurement");
    infer->add_option("--infer-out", infer_out, "Output directory (default <out_dir>/infer)");

    CLI::App* eval = app.add_subcommand("eval", "Paired evaluation of two checkpoints");
    std::string base_ckpt, guided_ckpt, eval_out;
    int eval_seeds = 0;
    eval->add_option("--base", base_ckpt, "Base-stage checkpoint")->required();
    eval->add_option("--guided", guided_ckpt, "Guided-stage checkpoint")->required();
    eval->add_option("--seeds", eval_seeds, "Seed count override");
    eval->add_option("--eval-out", eval_out, "Output directory (default <out_dir>/eval)");

    CLI::App* ablate = app.add_subcommand("ablate", "Stage-2 sweep from a shared stage-1 state");
    std::string sweep_param = "lambda";
    std::vector<double> sweep_values;
    std::string ablate_out;
    ablate->add_option("--param", sweep_param, "Sweep parameter: lambda | memory_window");
    ablate->add_option("--values", sweep_values, "Sweep values")->required();
    ablate->add_option("--ablate-out", ablate_out, "Output directory (default <out_dir>/ablate)");

    CLI::App* synth = app.add_subcommand("synth-data", "Write the dataset + measurement caches");

    CLI11_PARSE(app, argc, argv);

    try {
        udavi::ExperimentConfig cfg = load_config(config_path, seed_override, out_override);
        if (app.got_subcommand(train)) {
            udavi::TrainOutput out = udavi::cmd_train(cfg);
            std::printf("stage1 checkpoint: %s\n", out.stage1_checkpoint.c_str());
            std::printf("stage2 checkpoint: %s\n", out.stage2_checkpoint.c_str());
            std::printf("final param hash: %llu\n", (unsigned long long)out.final_param_hash);
        } else if (app.got_subcommand(infer)) {
            if (infer_out.empty()) infer_out = cfg.out_dir + "/infer";
            udavi::InferOutput out =
                udavi::cmd_infer(cfg, ckpt_path, measurements_dir, infer_seeds, infer_out);
            std::printf("samples: %d\nNFE per sample: %g\nreport: %s\n", out.samples,
                        out.nfe_per_sample, out.report_path.c_str());
        } else if (app.got_subcommand(eval)) {
            if (eval_out.empty()) eval_out = cfg.out_dir + "/eval";
            udavi::EvalOutput out =
                udavi::cmd_eval(cfg, base_ckpt, guided_ckpt, eval_out, eval_seeds);
            if (out.t_psnr) {
                std::printf("delta PSNR: t=%g p=%g\n", out.t_psnr->t_stat, out.t_psnr->p_value);
                std::printf("delta Frechet: t=%g p=%g\n", out.t_frechet->t_stat,
                            out.t_frechet->p_value);
            } else {
                std::printf("degenerate comparison: %s\n", out.degenerate_note.c_str());
            }
            std::printf("metrics: %s\n", out.metrics_csv.c_str());
        } else if (app.got_subcommand(ablate)) {
            if (ablate_out.empty()) ablate_out = cfg.out_dir + "/ablate";
            udavi::AblateOutput out = udavi::cmd_ablate(cfg, sweep_param, sweep_values, ablate_out);
            std::printf("sweep report: %s\n", out.report_csv.c_str());
            std::printf("best by delta PSNR: %g, best by delta Frechet: %g\n",
                        out.best_value_psnr, out.best_value_frechet);
        } else if (app.got_subcommand(synth)) {
            udavi::cmd_synth_data(cfg);
            std::printf("dataset cache: %s/dataset\n", cfg.out_dir.c_str());
        }
    } catch (const udavi::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.exit_code();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
