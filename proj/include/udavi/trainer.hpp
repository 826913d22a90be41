#pragma once

#include <functional>
#include <string>
#include <vector>

#include "udavi/bridge.hpp"
#include "udavi/losses.hpp"
#include "udavi/memory.hpp"
#include "udavi/model.hpp"
#include "udavi/operators.hpp"
#include "udavi/optimizer.hpp"
#include "udavi/prior.hpp"
#include "udavi/rng.hpp"
#include "udavi/schedule.hpp"

namespace udavi {

// Stage 1 trains the amortized generator with the plain bridge; stage 2
// continues with the uncertainty-guided bridge and the memory bank active.
enum class TrainStage { Base, Guided };

const char* stage_name(TrainStage s);

struct TrainConfig {
    double gamma = 0.5;             // data-consistency weight
    double lambda = 0.0;            // uncertainty scale (guided stage only)
    double h = 0.1;                 // bridge perturbation scale
    int memory_window = 8;          // EMA window N
    int batch_size = 8;
    double learning_rate = 1e-4;
    double student_learning_rate = 0.0;  // 0 means: use learning_rate
    double weight_decay = 0.0;
    double bridge_beta_alpha = 3.0;  // a ~ Beta(alpha, 1)
    int stage1_iters = 0;
    int stage2_iters = 0;
    uint64_t seed = 0;
    bool prior_term = true;  // disable to train on data consistency alone
    double grad_clip_norm = 0.0;  // 0 disables generator gradient clipping
    double divergence_threshold = 1e6;

    void validate() const;
};

struct StepTrace {
    int64_t iteration = 0;
    TrainStage stage = TrainStage::Base;
    double loss_consistency = 0.0;   // batch mean
    double loss_score = 0.0;         // batch mean
    double loss_ikl_surrogate = 0.0;  // batch mean of w(t) <delta_s, xhat_t>
    std::vector<int64_t> sample_ids;
    std::vector<double> a_draws;
    std::vector<int> t_draws;
    uint64_t generator_evals = 0;  // cumulative
    uint64_t student_evals = 0;
    std::vector<std::string> phases;  // executed update order
};

class Trainer {
public:
    Trainer(ForwardOperator op, ScheduleTable sched, GaussianPrior prior, ParamModel generator,
            ParamModel student, TrainConfig cfg, std::vector<SampleRecord> train_records);

    StepTrace train_step();
    void run_stage(TrainStage stage, int iters,
                   const std::function<void(const StepTrace&)>& on_step = nullptr);

    // Sets every memory to the current generator's reconstruction of its
    // sample and clears the uncertainty maps.
    void init_memories();

    TrainStage stage() const { return stage_; }
    void set_stage(TrainStage s) { stage_ = s; }
    int64_t iteration() const { return iteration_; }
    void set_iteration(int64_t it) { iteration_ = it; }

    ParamModel& generator() { return generator_; }
    ParamModel& student() { return student_; }
    const ParamModel& generator() const { return generator_; }
    const ParamModel& student() const { return student_; }
    AdamW& generator_opt() { return gen_opt_; }
    AdamW& student_opt() { return student_opt_; }
    const AdamW& generator_opt() const { return gen_opt_; }
    const AdamW& student_opt() const { return student_opt_; }
    std::vector<SampleRecord>& records() { return records_; }
    const std::vector<SampleRecord>& records() const { return records_; }
    const ScheduleTable& schedule() const { return sched_; }
    const ForwardOperator& op() const { return op_; }
    const GaussianPrior& prior() const { return prior_; }
    const TrainConfig& config() const { return cfg_; }
    void set_lambda(double lambda) { cfg_.lambda = lambda; }

private:
    std::vector<size_t> draw_batch();

    ForwardOperator op_;
    ScheduleTable sched_;
    GaussianPrior prior_;
    ParamModel generator_;
    ParamModel student_;
    TrainConfig cfg_;
    std::vector<SampleRecord> records_;
    AdamW gen_opt_;
    AdamW student_opt_;
    TrainStage stage_ = TrainStage::Base;
    int64_t iteration_ = 0;
    SeededRng root_rng_;
};

}  // namespace udavi
