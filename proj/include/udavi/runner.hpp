#pragma once

#include <optional>
#include <string>
#include <vector>

#include "udavi/checkpoint.hpp"
#include "udavi/config.hpp"
#include "udavi/dataset.hpp"
#include "udavi/operators.hpp"
#include "udavi/stats.hpp"
#include "udavi/trainer.hpp"

namespace udavi {

// Everything derived deterministically from the config: operator, schedule,
// teacher prior, synthesized records with measurements, and the split.
struct ExperimentSetup {
    ExperimentConfig cfg;
    ForwardOperator op;
    ScheduleTable sched;
    GaussianPrior prior;
    std::vector<SampleRecord> train_records;
    std::vector<SampleRecord> val_records;
    double clamp_rate = 0.0;
    uint64_t prior_hash = 0;
};

ExperimentSetup prepare_experiment(const ExperimentConfig& cfg);

ArchDescriptor generator_arch_from(const ExperimentConfig& cfg);
ArchDescriptor student_arch_from(const ExperimentConfig& cfg);
Trainer make_trainer(const ExperimentSetup& setup);

// Dataset cache: portable float64 binaries + manifest.json.
void write_dataset_cache(const std::string& dir, const std::vector<SampleRecord>& records,
                         const ExperimentConfig& cfg, uint64_t prior_hash, double clamp_rate);
std::vector<SampleRecord> read_dataset_cache(const std::string& dir);

// Measurement set consumed by infer/eval.
void write_measurement_set(const std::string& dir, const std::vector<SampleRecord>& records,
                           uint64_t config_hash);
std::vector<SampleRecord> read_measurement_set(const std::string& dir,
                                               uint64_t* config_hash = nullptr);

struct TrainOutput {
    std::string stage1_checkpoint;
    std::string stage2_checkpoint;
    std::string traces_path;
    std::string measurements_dir;
    uint64_t final_param_hash = 0;
};

TrainOutput cmd_train(const ExperimentConfig& cfg);

void cmd_synth_data(const ExperimentConfig& cfg);

struct InferOutput {
    int samples = 0;
    double nfe_per_sample = 0.0;
    std::string report_path;
};

InferOutput cmd_infer(const ExperimentConfig& cfg, const std::string& checkpoint_path,
                      const std::string& measurements_dir, int seeds,
                      const std::string& out_dir);

struct EvalOutput {
    std::vector<double> psnr_base, psnr_guided;
    std::vector<double> frechet_base, frechet_guided;
    std::vector<double> delta_psnr, delta_frechet;  // positive = guided better
    std::optional<TTestResult> t_psnr, t_frechet;
    std::string degenerate_note;  // set when deltas have zero variance
    double nfe_per_sample = 0.0;
    std::string metrics_csv, summary_json;
};

EvalOutput cmd_eval(const ExperimentConfig& cfg, const std::string& base_checkpoint,
                    const std::string& guided_checkpoint, const std::string& out_dir,
                    int seeds_override = 0);

struct AblateRow {
    double value = 0.0;
    double mean_delta_psnr = 0.0;
    double mean_delta_frechet = 0.0;
    double p_psnr = 1.0;
    double p_frechet = 1.0;
    std::string checkpoint;
};

struct AblateOutput {
    std::vector<AblateRow> rows;
    double best_value_psnr = 0.0;
    double best_value_frechet = 0.0;
    std::string report_csv, summary_json, curves_csv;
};

// sweep_param: "lambda" or "memory_window".
AblateOutput cmd_ablate(const ExperimentConfig& cfg, const std::string& sweep_param,
                        const std::vector<double>& values, const std::string& out_dir);

}  // namespace udavi
