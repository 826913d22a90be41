#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "udavi/dataset.hpp"
#include "udavi/trainer.hpp"

namespace udavi {

enum class TaskKind { Deblur, SuperRes };

struct OperatorConfig {
    int kernel_size = 7;        // deblur
    double kernel_sigma = 1.5;  // deblur
    int sr_factor = 2;          // superres
    double noise_sigma = 0.05;  // sigma_y
};

struct ScheduleConfig {
    int timesteps = 400;
    double beta_start = 1e-4;
    double beta_end = 0.02;
};

struct DatasetConfig {
    DatasetKind kind = DatasetKind::GaussianPriorDraws;
    int count = 64;
    int height = 8;
    int width = 8;
    int channels = 1;
    uint64_t seed = 0;
    double val_fraction = 0.2;
};

enum class PriorKind { Isotropic, Gmm, FitToTrain };

struct PriorComponentConfig {
    double weight = 1.0;
    double std_dev = 0.25;
    std::string mean_kind = "zero";  // zero | bump
    double mean_scale = 0.0;
};

struct PriorConfig {
    PriorKind kind = PriorKind::Isotropic;
    double std_dev = 0.25;           // isotropic
    std::string mean_kind = "zero";  // isotropic: zero | bump
    double mean_scale = 0.0;
    double shrinkage = 0.5;  // fit: weight on the scaled-identity target
    std::vector<PriorComponentConfig> components;
};

struct ModelConfig {
    std::string generator_kind = "affine";  // affine | conv
    std::string student_kind = "diag_time";  // diag_time | conv
    int base_channels = 8;
    int levels = 3;
    std::string generator_init = "identity";  // zero | identity | random
    std::string student_init = "zero";         // zero | teacher
};

struct EvalSettings {
    int seeds = 100;
    int curve_interval = 0;  // 0 disables per-iteration curves
    int curve_seeds = 2;
};

struct ExperimentConfig {
    TaskKind task = TaskKind::Deblur;
    OperatorConfig op;
    ScheduleConfig schedule;
    DatasetConfig dataset;
    PriorConfig prior;
    ModelConfig model;
    TrainConfig train;
    EvalSettings eval;
    std::string out_dir = "runs/out";

    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig from_file(const std::string& path);
    nlohmann::json to_json() const;

    // Hash of the full config (out_dir excluded so relocated runs compare
    // equal); recorded in every output header.
    uint64_t config_hash() const;
    // Hash of the comparability-relevant subset: stage-2 hyperparameters
    // (lambda, stage2_iters, memory window) are excluded so a guided run can
    // be evaluated against its own base continuation.
    uint64_t experiment_hash() const;

    void validate() const;
};

const char* task_name(TaskKind t);
const char* dataset_kind_name(DatasetKind k);

}  // namespace udavi
