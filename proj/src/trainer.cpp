#include "udavi/trainer.hpp"

#include <cmath>

namespace udavi {

const char* stage_name(TrainStage s) { return s == TrainStage::Base ? "base" : "guided"; }

void TrainConfig::validate() const {
    require(gamma > 0.0, ErrorKind::Config, "train.gamma must be > 0");
    require(lambda >= 0.0, ErrorKind::Config, "train.lambda must be >= 0");
    require(h >= 0.0, ErrorKind::Config, "train.h must be >= 0");
    require(memory_window >= 1, ErrorKind::Config, "train.memory_window must be >= 1");
    require(batch_size >= 1, ErrorKind::Config, "train.batch_size must be >= 1");
    require(learning_rate > 0.0, ErrorKind::Config, "train.learning_rate must be > 0");
    require(student_learning_rate >= 0.0, ErrorKind::Config,
            "train.student_learning_rate must be >= 0");
    require(bridge_beta_alpha > 0.0, ErrorKind::Config, "train.bridge_beta_alpha must be > 0");
    require(stage1_iters >= 0 && stage2_iters >= 0, ErrorKind::Config,
            "iteration counts must be >= 0");
    require(grad_clip_norm >= 0.0, ErrorKind::Config, "train.grad_clip_norm must be >= 0");
    require(divergence_threshold > 0.0, ErrorKind::Config,
            "train.divergence_threshold must be > 0");
}

Trainer::Trainer(ForwardOperator op, ScheduleTable sched, GaussianPrior prior,
                 ParamModel generator, ParamModel student, TrainConfig cfg,
                 std::vector<SampleRecord> train_records)
    : op_(std::move(op)), sched_(std::move(sched)), prior_(std::move(prior)),
      generator_(std::move(generator)), student_(std::move(student)), cfg_(cfg),
      records_(std::move(train_records)),
      gen_opt_(generator_.params().size(), cfg.learning_rate, cfg.weight_decay),
      student_opt_(student_.params().size(),
                   cfg.student_learning_rate > 0.0 ? cfg.student_learning_rate
                                                   : cfg.learning_rate,
                   cfg.weight_decay),
      root_rng_(cfg.seed) {
    cfg_.validate();
    require(!records_.empty(), ErrorKind::Config, "trainer needs at least one training record");
}

std::vector<size_t> Trainer::draw_batch() {
    SeededRng rng = root_rng_.derive(RngPurpose::BatchDraw, 0, uint64_t(iteration_));
    std::vector<size_t> batch(size_t(cfg_.batch_size), 0);
    for (auto& idx : batch) idx = size_t(rng.next_int(0, int64_t(records_.size()) - 1));
    return batch;
}

StepTrace Trainer::train_step() {
    const int B = cfg_.batch_size;
    const int T = sched_.timesteps();
    StepTrace trace;
    trace.iteration = iteration_;
    trace.stage = stage_;

    struct PerSample {
        SampleRecord* rec = nullptr;
        ParamModel::Tape gen_tape;
        ImageGrid xhat0;
        ImageGrid z_diffuse;
        ImageGrid xhat_t;
        int t = 0;
    };

    std::vector<size_t> batch = draw_batch();
    std::vector<PerSample> samples(batch.size());

    // Phase 1: bridge draws, generator forward, diffusion, student DSM update.
    std::vector<double> student_grad(student_.params().size(), 0.0);
    double score_loss_acc = 0.0;
    for (size_t bi = 0; bi < batch.size(); ++bi) {
        PerSample& ps = samples[bi];
        ps.rec = &records_[batch[bi]];
        trace.sample_ids.push_back(ps.rec->sample_id);

        SeededRng rb = root_rng_.derive(RngPurpose::TrainBridge, uint64_t(ps.rec->sample_id),
                                        uint64_t(iteration_));
        double a = rb.next_beta_alpha1(cfg_.bridge_beta_alpha);
        trace.a_draws.push_back(a);
        ImageGrid z = gaussian_sample(rb, ps.rec->x0.height, ps.rec->x0.width,
                                      ps.rec->x0.channels);
        BridgeDraw bd;
        if (stage_ == TrainStage::Guided) {
            bd = sample_bridge_uncertain(ps.rec->x0, ps.rec->y_model, a, cfg_.h, z,
                                         ps.rec->uncertainty, cfg_.lambda, sched_);
        } else {
            bd = sample_bridge(ps.rec->x0, ps.rec->y_model, a, cfg_.h, z, sched_);
        }
        ps.xhat0 = generator_.forward_tape(bd.y_a, &ps.gen_tape);
        ps.xhat0.range_tag = RangeTag::ModelSpace;

        SeededRng rd = root_rng_.derive(RngPurpose::TrainDiffuse, uint64_t(ps.rec->sample_id),
                                        uint64_t(iteration_));
        ps.t = int(rd.next_int(1, T));
        trace.t_draws.push_back(ps.t);
        ps.z_diffuse = gaussian_sample(rd, ps.rec->x0.height, ps.rec->x0.width,
                                       ps.rec->x0.channels);
        ps.xhat_t = diffuse(ps.xhat0, ps.t, ps.z_diffuse, sched_);

        // DSM loss and gradient; xhat0 is a constant here, so nothing flows to phi.
        double ab = sched_.alpha_bar(ps.t);
        ParamModel::Tape stape;
        ImageGrid eps_hat = student_.forward_tape(ps.xhat_t, &stape, ps.t, &sched_);
        double inv = 1.0 / (1.0 - ab);
        double loss = 0.0;
        ImageGrid cot = eps_hat;
        for (size_t i = 0; i < eps_hat.values.size(); ++i) {
            double r = eps_hat.values[i] - ps.z_diffuse.values[i];
            loss += r * r * inv;
            cot.values[i] = 2.0 * r * inv / double(B);
        }
        score_loss_acc += loss;
        student_.backward(stape, cot, student_grad);
    }
    trace.loss_score = score_loss_acc / double(B);
    require(std::isfinite(trace.loss_score), ErrorKind::Numeric,
            "divergence guard: score loss is non-finite");
    require(trace.loss_score <= cfg_.divergence_threshold, ErrorKind::Numeric,
            "divergence guard: score loss exceeded threshold");
    student_opt_.step(student_.params(), student_grad);
    trace.phases.push_back("student_update");

    // Phase 2: generator update with the refreshed student.
    std::vector<double> gen_grad(generator_.params().size(), 0.0);
    double cons_acc = 0.0;
    double surrogate_acc = 0.0;
    for (PerSample& ps : samples) {
        cons_acc += consistency_loss(op_, ps.rec->y, ps.xhat0);
        ImageGrid cot = consistency_grad(op_, ps.rec->y, ps.xhat0);
        for (double& v : cot.values) v *= cfg_.gamma / double(B);
        if (cfg_.prior_term) {
            ImageGrid s_student = student_score(student_, ps.xhat_t, ps.t, sched_);
            ImageGrid s_teacher = prior_.score(ps.xhat_t, ps.t, sched_);
            ImageGrid delta = sub(s_student, s_teacher);
            delta.check_finite("train_step ikl");
            double w = sched_.ikl_weight(ps.t);
            surrogate_acc += w * dot(delta, ps.xhat_t);
            double c = w * std::sqrt(sched_.alpha_bar(ps.t)) / double(B);
            for (size_t i = 0; i < cot.values.size(); ++i) cot.values[i] += c * delta.values[i];
        }
        generator_.backward(ps.gen_tape, cot, gen_grad);
    }
    trace.loss_consistency = cons_acc / double(B);
    trace.loss_ikl_surrogate = surrogate_acc / double(B);
    require(std::isfinite(trace.loss_consistency), ErrorKind::Numeric,
            "divergence guard: consistency loss is non-finite");
    require(trace.loss_consistency <= cfg_.divergence_threshold, ErrorKind::Numeric,
            "divergence guard: consistency loss exceeded threshold");
    require(std::isfinite(trace.loss_ikl_surrogate) &&
                std::fabs(trace.loss_ikl_surrogate) <= cfg_.divergence_threshold,
            ErrorKind::Numeric, "divergence guard: prior surrogate diverged");
    if (cfg_.grad_clip_norm > 0.0) {
        double norm = 0.0;
        for (double g : gen_grad) norm += g * g;
        norm = std::sqrt(norm);
        if (norm > cfg_.grad_clip_norm) {
            double scale = cfg_.grad_clip_norm / norm;
            for (double& g : gen_grad) g *= scale;
        }
    }
    gen_opt_.step(generator_.params(), gen_grad);
    trace.phases.push_back("generator_update");

    // Phase 3 (guided stage): uncertainty from the pre-update memory, then EMA.
    if (stage_ == TrainStage::Guided) {
        for (PerSample& ps : samples) {
            ImageGrid xhat_star = rescale_to_memory_space(ps.xhat0);
            ImageGrid u_new = uncertainty_map(xhat_star, ps.rec->memory);
            ps.rec->memory = ema_update(ps.rec->memory, xhat_star, cfg_.memory_window);
            ps.rec->uncertainty = std::move(u_new);
        }
        trace.phases.push_back("memory_update");
    }

    trace.generator_evals = generator_.eval_count();
    trace.student_evals = student_.eval_count();
    ++iteration_;
    return trace;
}

void Trainer::run_stage(TrainStage stage, int iters,
                        const std::function<void(const StepTrace&)>& on_step) {
    stage_ = stage;
    for (int i = 0; i < iters; ++i) {
        StepTrace trace = train_step();
        if (on_step) on_step(trace);
    }
}

void Trainer::init_memories() {
    for (SampleRecord& rec : records_) {
        SeededRng rng = root_rng_.derive(RngPurpose::MemoryInit, uint64_t(rec.sample_id), 0);
        ImageGrid input = inference_input(rec.y_model, cfg_.h, rng);
        ImageGrid recon = generator_forward(generator_, input);
        rec.memory = rescale_to_memory_space(recon);
        rec.uncertainty = ImageGrid::zeros(rec.x0.height, rec.x0.width, 1, RangeTag::MemorySpace);
    }
}

}  // namespace udavi
