#include "udavi/runner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "udavi/artifacts.hpp"
#include "udavi/bridge.hpp"
#include "udavi/metrics.hpp"
#include "udavi/parallel.hpp"

namespace udavi {

using nlohmann::json;

namespace {

std::vector<double> mean_pattern(const std::string& kind, double scale, int h, int w, int c) {
    std::vector<double> mean(size_t(h) * w * c, 0.0);
    if (kind == "zero") return mean;
    for (int r = 0; r < h; ++r) {
        for (int cc = 0; cc < w; ++cc) {
            double v;
            if (kind == "flat") {
                v = scale;
            } else if (kind == "bump") {
                double x = (double(cc) + 0.5) / w - 0.5;
                double y = (double(r) + 0.5) / h - 0.5;
                v = scale * std::cos(M_PI * x) * std::cos(M_PI * y);
            } else {
                fail_config("prior.mean_kind: unknown pattern '" + kind + "'");
            }
            for (int ch = 0; ch < c; ++ch) {
                mean[size_t((r * w + cc) * c + ch)] = v;
            }
        }
    }
    return mean;
}

GaussianPrior build_configured_prior(const ExperimentConfig& cfg) {
    int d = cfg.dataset.height * cfg.dataset.width * cfg.dataset.channels;
    if (cfg.prior.kind == PriorKind::Isotropic) {
        DenseMatrix cov(d, d);
        for (int i = 0; i < d; ++i) cov.at(i, i) = cfg.prior.std_dev * cfg.prior.std_dev;
        return GaussianPrior::single(
            mean_pattern(cfg.prior.mean_kind, cfg.prior.mean_scale, cfg.dataset.height,
                         cfg.dataset.width, cfg.dataset.channels),
            std::move(cov));
    }
    require(cfg.prior.kind == PriorKind::Gmm, ErrorKind::Logic,
            "fit prior must be built from training data");
    std::vector<GaussianComponent> comps;
    for (const auto& pc : cfg.prior.components) {
        GaussianComponent comp;
        comp.weight = pc.weight;
        comp.mean = mean_pattern(pc.mean_kind, pc.mean_scale, cfg.dataset.height,
                                 cfg.dataset.width, cfg.dataset.channels);
        comp.cov = DenseMatrix(d, d);
        for (int i = 0; i < d; ++i) comp.cov.at(i, i) = pc.std_dev * pc.std_dev;
        comps.push_back(std::move(comp));
    }
    return GaussianPrior::mixture(std::move(comps));
}

GaussianPrior fit_prior_to_records(const std::vector<SampleRecord>& records, double shrinkage) {
    require(!records.empty(), ErrorKind::Config, "cannot fit a prior to an empty training set");
    int d = int(records[0].x0.size());
    std::vector<double> mean(size_t(d), 0.0);
    for (const auto& rec : records) {
        for (int i = 0; i < d; ++i) mean[size_t(i)] += rec.x0.values[size_t(i)];
    }
    for (double& v : mean) v /= double(records.size());
    DenseMatrix cov(d, d);
    for (const auto& rec : records) {
        for (int i = 0; i < d; ++i) {
            double di = rec.x0.values[size_t(i)] - mean[size_t(i)];
            for (int j = 0; j <= i; ++j) {
                double dj = rec.x0.values[size_t(j)] - mean[size_t(j)];
                cov.at(i, j) += di * dj;
            }
        }
    }
    double denom = records.size() > 1 ? double(records.size() - 1) : 1.0;
    double trace = 0.0;
    for (int i = 0; i < d; ++i) trace += cov.at(i, i) / denom;
    double target = trace / double(d);
    // Ledoit-Wolf style shrinkage toward the scaled identity keeps the
    // dominant correlation structure while flooring the thin directions the
    // small sample cannot estimate.
    for (int i = 0; i < d; ++i)
        for (int j = 0; j <= i; ++j) {
            double v = (1.0 - shrinkage) * cov.at(i, j) / denom;
            if (i == j) v += shrinkage * target;
            cov.at(i, j) = v;
            cov.at(j, i) = v;
        }
    return GaussianPrior::single(std::move(mean), std::move(cov));
}

uint64_t prior_content_hash(const GaussianPrior& prior) {
    uint64_t h = 1469598103934665603ULL;
    for (const auto& comp : prior.components()) {
        h = fnv1a(&comp.weight, sizeof(comp.weight), h);
        h = fnv1a(comp.mean.data(), comp.mean.size() * sizeof(double), h);
        h = fnv1a(comp.cov.entries.data(), comp.cov.entries.size() * sizeof(double), h);
    }
    return h;
}

std::string trace_to_json_line(const StepTrace& t) {
    json j;
    j["iteration"] = t.iteration;
    j["stage"] = stage_name(t.stage);
    j["loss_consistency"] = t.loss_consistency;
    j["loss_score"] = t.loss_score;
    j["loss_prior_surrogate"] = t.loss_ikl_surrogate;
    j["sample_ids"] = t.sample_ids;
    j["a"] = t.a_draws;
    j["t"] = t.t_draws;
    j["generator_evals"] = t.generator_evals;
    j["student_evals"] = t.student_evals;
    j["phases"] = t.phases;
    return j.dump();
}

}  // namespace

ExperimentSetup prepare_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentSetup setup;
    setup.cfg = cfg;

    if (cfg.task == TaskKind::Deblur) {
        ImageGrid kernel = make_gaussian_kernel(cfg.op.kernel_size, cfg.op.kernel_sigma);
        setup.op = ForwardOperator::gaussian_blur(std::move(kernel), cfg.op.noise_sigma);
    } else {
        setup.op = ForwardOperator::avg_pool_sr(cfg.op.sr_factor, cfg.op.noise_sigma);
    }
    setup.sched =
        ScheduleTable::linear(cfg.schedule.timesteps, cfg.schedule.beta_start, cfg.schedule.beta_end);

    const GaussianPrior* synth_prior = nullptr;
    GaussianPrior configured;
    if (cfg.prior.kind != PriorKind::FitToTrain) {
        configured = build_configured_prior(cfg);
        synth_prior = &configured;
    }

    DatasetSpec spec;
    spec.kind = cfg.dataset.kind;
    spec.count = cfg.dataset.count;
    spec.height = cfg.dataset.height;
    spec.width = cfg.dataset.width;
    spec.channels = cfg.dataset.channels;
    spec.seed = cfg.dataset.seed;
    SeededRng data_root(cfg.dataset.seed);
    SynthResult synth = synth_dataset(spec, synth_prior, data_root);
    setup.clamp_rate = synth.clamp_rate;

    for (SampleRecord& rec : synth.records) {
        SeededRng mrng = data_root.derive(RngPurpose::Measure, uint64_t(rec.sample_id), 0);
        rec.y = setup.op.measure(rec.x0, mrng);
        rec.y_model = cfg.task == TaskKind::SuperRes ? upsample_nearest(rec.y, cfg.op.sr_factor)
                                                     : rec.y;
        rec.y_model.range_tag = RangeTag::ModelSpace;
    }

    auto [train, val] = train_val_split(std::move(synth.records), cfg.dataset.val_fraction,
                                        data_root);
    setup.train_records = std::move(train);
    setup.val_records = std::move(val);

    if (cfg.prior.kind == PriorKind::FitToTrain) {
        setup.prior = fit_prior_to_records(setup.train_records, cfg.prior.shrinkage);
    } else {
        setup.prior = std::move(configured);
    }
    setup.prior_hash = prior_content_hash(setup.prior);
    return setup;
}

ArchDescriptor generator_arch_from(const ExperimentConfig& cfg) {
    ArchDescriptor a;
    a.in_height = cfg.dataset.height;
    a.in_width = cfg.dataset.width;
    a.in_channels = cfg.dataset.channels;
    a.out_channels = cfg.dataset.channels;
    if (cfg.model.generator_kind == "affine") {
        a.kind = ArchKind::Affine;
        a.squash_output = false;
        a.input_skip = false;
    } else {
        a.kind = ArchKind::Conv;
        a.base_channels = cfg.model.base_channels;
        a.levels = cfg.model.levels;
        a.squash_output = true;
        a.input_skip = true;
    }
    return a;
}

ArchDescriptor student_arch_from(const ExperimentConfig& cfg) {
    ArchDescriptor a;
    a.in_height = cfg.dataset.height;
    a.in_width = cfg.dataset.width;
    a.in_channels = cfg.dataset.channels;
    a.out_channels = cfg.dataset.channels;
    if (cfg.model.student_kind == "diag_time") {
        a.kind = ArchKind::DiagTime;
        a.timesteps = cfg.schedule.timesteps;
    } else {
        a.kind = ArchKind::Conv;
        a.base_channels = cfg.model.base_channels;
        a.levels = cfg.model.levels;
        a.squash_output = false;
        a.input_skip = false;
        a.time_channel = true;
    }
    return a;
}

namespace {

// Seeds the diag student at the teacher score in noise-prediction form, the
// usual distillation warm start. Exact for diagonal prior covariances; for a
// mixture it matches the moment-matched single Gaussian.
void init_student_from_teacher(ParamModel* student, const GaussianPrior& prior,
                               const ScheduleTable& sched) {
    const ArchDescriptor& arch = student->arch();
    require(arch.kind == ArchKind::DiagTime, ErrorKind::Config,
            "teacher student init needs the diag_time architecture");
    int d = arch.in_height * arch.in_width * arch.in_channels;
    require(prior.dim() == d, ErrorKind::Config, "prior/student dimension mismatch");
    std::vector<double> mean(size_t(d), 0.0);
    std::vector<double> var(size_t(d), 0.0);
    for (const GaussianComponent& comp : prior.components()) {
        for (int i = 0; i < d; ++i) {
            mean[size_t(i)] += comp.weight * comp.mean[size_t(i)];
            var[size_t(i)] +=
                comp.weight * (comp.cov.at(i, i) + comp.mean[size_t(i)] * comp.mean[size_t(i)]);
        }
    }
    for (int i = 0; i < d; ++i) var[size_t(i)] -= mean[size_t(i)] * mean[size_t(i)];
    int T = arch.timesteps;
    auto& params = student->params();
    for (int t = 1; t <= T; ++t) {
        double ab = sched.alpha_bar(t);
        double sq = std::sqrt(1.0 - ab);
        for (int i = 0; i < d; ++i) {
            double pt = ab * var[size_t(i)] + (1.0 - ab);
            params[size_t(t - 1) * d + i] = sq / pt;
            params[size_t(T) * d + size_t(t - 1) * d + i] =
                -sq * std::sqrt(ab) * mean[size_t(i)] / pt;
        }
    }
}

}  // namespace

Trainer make_trainer(const ExperimentSetup& setup) {
    const ExperimentConfig& cfg = setup.cfg;
    InitMode gen_init = InitMode::Identity;
    if (cfg.model.generator_init == "zero") gen_init = InitMode::Zero;
    if (cfg.model.generator_init == "random") gen_init = InitMode::Random;
    SeededRng root(cfg.train.seed);
    ParamModel generator = ParamModel::create(generator_arch_from(cfg), gen_init,
                                              root.derive(RngPurpose::ParamInit, 0, 0));
    // A fully zeroed conv net is gradient-dead; random hidden layers with a
    // zeroed output conv start the student at eps_hat = 0 and still train.
    ArchDescriptor student_arch = student_arch_from(cfg);
    InitMode student_init =
        student_arch.kind == ArchKind::Conv ? InitMode::Identity : InitMode::Zero;
    ParamModel student = ParamModel::create(student_arch, student_init,
                                            root.derive(RngPurpose::ParamInit, 1, 0));
    if (cfg.model.student_init == "teacher") {
        init_student_from_teacher(&student, setup.prior, setup.sched);
    }
    return Trainer(setup.op, setup.sched, setup.prior, std::move(generator), std::move(student),
                   cfg.train, setup.train_records);
}

void write_dataset_cache(const std::string& dir, const std::vector<SampleRecord>& records,
                         const ExperimentConfig& cfg, uint64_t prior_hash, double clamp_rate) {
    ensure_directory(dir);
    json manifest;
    manifest["count"] = records.size();
    manifest["height"] = cfg.dataset.height;
    manifest["width"] = cfg.dataset.width;
    manifest["channels"] = cfg.dataset.channels;
    manifest["seed"] = cfg.dataset.seed;
    manifest["kind"] = dataset_kind_name(cfg.dataset.kind);
    manifest["prior_hash"] = prior_hash;
    manifest["clamp_rate"] = clamp_rate;
    write_text_file(dir + "/manifest.json", manifest.dump(2) + "\n");
    char name[64];
    for (const SampleRecord& rec : records) {
        std::snprintf(name, sizeof(name), "/x0_%05lld.f64", (long long)rec.sample_id);
        write_doubles(dir + name, rec.x0.values);
    }
}

std::vector<SampleRecord> read_dataset_cache(const std::string& dir) {
    json manifest = json::parse(read_text_file(dir + "/manifest.json"));
    size_t count = manifest.at("count").get<size_t>();
    int h = manifest.at("height").get<int>();
    int w = manifest.at("width").get<int>();
    int c = manifest.at("channels").get<int>();
    std::vector<SampleRecord> records(count);
    char name[64];
    // Cache files are keyed by sample id, which for a fresh synth is 0..n-1.
    size_t idx = 0;
    for (auto& rec : records) {
        rec.sample_id = int64_t(idx);
        std::snprintf(name, sizeof(name), "/x0_%05lld.f64", (long long)rec.sample_id);
        ImageGrid g(h, w, c, RangeTag::ModelSpace);
        g.values = read_doubles(dir + name);
        require(g.values.size() == size_t(h) * w * c, ErrorKind::Io,
                "dataset cache record has wrong length");
        rec.x0 = std::move(g);
        ++idx;
    }
    return records;
}

void write_measurement_set(const std::string& dir, const std::vector<SampleRecord>& records,
                           uint64_t config_hash) {
    ensure_directory(dir);
    require(!records.empty(), ErrorKind::Logic, "measurement set is empty");
    json manifest;
    manifest["count"] = records.size();
    manifest["config_hash"] = config_hash;
    manifest["y_height"] = records[0].y.height;
    manifest["y_width"] = records[0].y.width;
    manifest["y_channels"] = records[0].y.channels;
    manifest["model_height"] = records[0].y_model.height;
    manifest["model_width"] = records[0].y_model.width;
    manifest["model_channels"] = records[0].y_model.channels;
    std::vector<int64_t> ids;
    for (const auto& r : records) ids.push_back(r.sample_id);
    manifest["sample_ids"] = ids;
    write_text_file(dir + "/manifest.json", manifest.dump(2) + "\n");
    char name[64];
    for (const SampleRecord& rec : records) {
        std::snprintf(name, sizeof(name), "/y_%05lld.f64", (long long)rec.sample_id);
        write_doubles(dir + name, rec.y.values);
        std::snprintf(name, sizeof(name), "/ymodel_%05lld.f64", (long long)rec.sample_id);
        write_doubles(dir + name, rec.y_model.values);
        std::snprintf(name, sizeof(name), "/x0_%05lld.f64", (long long)rec.sample_id);
        write_doubles(dir + name, rec.x0.values);
    }
}

std::vector<SampleRecord> read_measurement_set(const std::string& dir, uint64_t* config_hash) {
    json manifest = json::parse(read_text_file(dir + "/manifest.json"));
    if (config_hash) *config_hash = manifest.at("config_hash").get<uint64_t>();
    std::vector<int64_t> ids = manifest.at("sample_ids").get<std::vector<int64_t>>();
    int yh = manifest.at("y_height").get<int>();
    int yw = manifest.at("y_width").get<int>();
    int yc = manifest.at("y_channels").get<int>();
    int mh = manifest.at("model_height").get<int>();
    int mw = manifest.at("model_width").get<int>();
    int mc = manifest.at("model_channels").get<int>();
    std::vector<SampleRecord> records;
    char name[64];
    for (int64_t id : ids) {
        SampleRecord rec;
        rec.sample_id = id;
        std::snprintf(name, sizeof(name), "/y_%05lld.f64", (long long)id);
        rec.y = ImageGrid(yh, yw, yc, RangeTag::Unbounded);
        rec.y.values = read_doubles(dir + name);
        std::snprintf(name, sizeof(name), "/ymodel_%05lld.f64", (long long)id);
        rec.y_model = ImageGrid(mh, mw, mc, RangeTag::ModelSpace);
        rec.y_model.values = read_doubles(dir + name);
        std::snprintf(name, sizeof(name), "/x0_%05lld.f64", (long long)id);
        rec.x0 = ImageGrid(mh, mw, mc, RangeTag::ModelSpace);
        rec.x0.values = read_doubles(dir + name);
        records.push_back(std::move(rec));
    }
    return records;
}

TrainOutput cmd_train(const ExperimentConfig& cfg) {
    ExperimentSetup setup = prepare_experiment(cfg);
    ensure_directory(cfg.out_dir);
    ensure_directory(cfg.out_dir + "/checkpoints");
    ensure_directory(cfg.out_dir + "/images");
    write_text_file(cfg.out_dir + "/config.json", setup.cfg.to_json().dump(2) + "\n");

    std::vector<SampleRecord> all_records = setup.train_records;
    for (const auto& r : setup.val_records) all_records.push_back(r);
    std::sort(all_records.begin(), all_records.end(),
              [](const SampleRecord& a, const SampleRecord& b) {
                  return a.sample_id < b.sample_id;
              });
    write_dataset_cache(cfg.out_dir + "/dataset", all_records, cfg, setup.prior_hash,
                        setup.clamp_rate);
    write_measurement_set(cfg.out_dir + "/val", setup.val_records, cfg.config_hash());

    Trainer trainer = make_trainer(setup);

    TrainOutput out;
    out.traces_path = cfg.out_dir + "/traces.ndjson";
    out.measurements_dir = cfg.out_dir + "/val";
    std::ofstream traces(out.traces_path, std::ios::binary);
    if (!traces) fail_io("cannot open " + out.traces_path);
    auto trace_sink = [&traces](const StepTrace& t) { traces << trace_to_json_line(t) << "\n"; };

    trainer.run_stage(TrainStage::Base, cfg.train.stage1_iters, trace_sink);
    out.stage1_checkpoint = cfg.out_dir + "/checkpoints/stage1.ckpt";
    Checkpoint::from_trainer(trainer, cfg.config_hash(), cfg.experiment_hash(), false)
        .save(out.stage1_checkpoint);

    trainer.init_memories();
    trainer.run_stage(TrainStage::Guided, cfg.train.stage2_iters, trace_sink);
    out.stage2_checkpoint = cfg.out_dir + "/checkpoints/stage2.ckpt";
    Checkpoint::from_trainer(trainer, cfg.config_hash(), cfg.experiment_hash(), true)
        .save(out.stage2_checkpoint);

    uint64_t h = hash_doubles(trainer.generator().params());
    h = fnv1a(trainer.student().params().data(),
              trainer.student().params().size() * sizeof(double), h);
    out.final_param_hash = h;

    // Qualitative sample: first validation measurement and its reconstruction.
    if (!setup.val_records.empty()) {
        const SampleRecord& rec = setup.val_records[0];
        SeededRng rng = SeededRng(cfg.train.seed).derive(RngPurpose::Inference,
                                                         uint64_t(rec.sample_id), 0);
        ImageGrid recon = generator_forward(trainer.generator(),
                                            inference_input(rec.y_model, cfg.train.h, rng));
        export_image(rec.x0, cfg.out_dir + "/images/val0_truth.pgm");
        export_image(rec.y_model, cfg.out_dir + "/images/val0_measurement.pgm");
        for (double& v : recon.values) v = std::clamp(v, -1.0, 1.0);
        export_image(recon, cfg.out_dir + "/images/val0_recon.pgm");
    }
    return out;
}

void cmd_synth_data(const ExperimentConfig& cfg) {
    ExperimentSetup setup = prepare_experiment(cfg);
    std::vector<SampleRecord> all_records = setup.train_records;
    for (const auto& r : setup.val_records) all_records.push_back(r);
    std::sort(all_records.begin(), all_records.end(),
              [](const SampleRecord& a, const SampleRecord& b) {
                  return a.sample_id < b.sample_id;
              });
    write_dataset_cache(cfg.out_dir + "/dataset", all_records, cfg, setup.prior_hash,
                        setup.clamp_rate);
    write_measurement_set(cfg.out_dir + "/val", setup.val_records, cfg.config_hash());
}

InferOutput cmd_infer(const ExperimentConfig& cfg, const std::string& checkpoint_path,
                      const std::string& measurements_dir, int seeds,
                      const std::string& out_dir) {
    require(seeds >= 1, ErrorKind::Config, "infer needs at least one seed");
    Checkpoint ck = Checkpoint::load(checkpoint_path);
    require(ck.experiment_hash == cfg.experiment_hash(), ErrorKind::Config,
            "checkpoint does not belong to this experiment (hash mismatch)");
    ScheduleTable sched = ScheduleTable::from_betas(ck.schedule_betas);
    require(sched.timesteps() == cfg.schedule.timesteps, ErrorKind::Config,
            "checkpoint/schedule mismatch");
    ParamModel generator = ParamModel::create(ck.generator_arch, InitMode::Zero, SeededRng(0));
    generator.params() = ck.generator_params;
    generator.reset_eval_count();

    std::vector<SampleRecord> records = read_measurement_set(measurements_dir);
    ensure_directory(out_dir);
    ensure_directory(out_dir + "/images");

    int64_t samples = 0;
    char name[96];
    for (const SampleRecord& rec : records) {
        for (int s = 0; s < seeds; ++s) {
            SeededRng rng = SeededRng(cfg.train.seed)
                                .derive(RngPurpose::Inference, uint64_t(rec.sample_id), uint64_t(s));
            ImageGrid input = inference_input(rec.y_model, cfg.train.h, rng);
            ImageGrid recon = generator_forward(generator, input);
            ++samples;
            std::snprintf(name, sizeof(name), "/sample_%05lld_seed%03d.f64",
                          (long long)rec.sample_id, s);
            write_doubles(out_dir + name, recon.values);
            if (s == 0) {
                std::snprintf(name, sizeof(name), "/images/sample_%05lld_seed000.pgm",
                              (long long)rec.sample_id);
                ImageGrid clamped = recon;
                for (double& v : clamped.values) v = std::clamp(v, -1.0, 1.0);
                export_image(clamped, out_dir + name);
            }
        }
    }

    InferOutput out;
    out.samples = int(samples);
    out.nfe_per_sample = double(generator.eval_count()) / double(samples);
    out.report_path = out_dir + "/nfe_report.json";
    json report;
    report["config_hash"] = cfg.config_hash();
    report["samples"] = samples;
    report["generator_evals"] = generator.eval_count();
    report["nfe_per_sample"] = out.nfe_per_sample;
    write_text_file(out.report_path, report.dump(2) + "\n");
    return out;
}

EvalOutput cmd_eval(const ExperimentConfig& cfg, const std::string& base_checkpoint,
                    const std::string& guided_checkpoint, const std::string& out_dir,
                    int seeds_override) {
    int seeds = seeds_override > 0 ? seeds_override : cfg.eval.seeds;
    require(seeds >= 2, ErrorKind::Config, "eval needs at least 2 seeds");

    Checkpoint ck_base = Checkpoint::load(base_checkpoint);
    Checkpoint ck_guided = Checkpoint::load(guided_checkpoint);
    require(ck_base.experiment_hash == ck_guided.experiment_hash, ErrorKind::Config,
            "eval rejects mixed checkpoints: experiment hashes differ");
    require(ck_base.experiment_hash == cfg.experiment_hash(), ErrorKind::Config,
            "checkpoints do not belong to this experiment (hash mismatch)");

    ExperimentSetup setup = prepare_experiment(cfg);
    ParamModel base = ParamModel::create(ck_base.generator_arch, InitMode::Zero, SeededRng(0));
    base.params() = ck_base.generator_params;
    ParamModel guided = ParamModel::create(ck_guided.generator_arch, InitMode::Zero, SeededRng(0));
    guided.params() = ck_guided.generator_params;
    base.reset_eval_count();
    guided.reset_eval_count();

    const auto& val = setup.val_records;
    require(!val.empty(), ErrorKind::Config, "eval needs a non-empty validation split");

    std::vector<ImageGrid> refs;
    for (const auto& rec : val) refs.push_back(rec.x0);

    EvalOutput out;
    out.psnr_base.assign(size_t(seeds), 0.0);
    out.psnr_guided.assign(size_t(seeds), 0.0);
    out.frechet_base.assign(size_t(seeds), 0.0);
    out.frechet_guided.assign(size_t(seeds), 0.0);

    parallel_for(size_t(seeds), [&](size_t s) {
        double psnr_b = 0.0, psnr_g = 0.0;
        std::vector<ImageGrid> set_b, set_g;
        set_b.reserve(val.size());
        set_g.reserve(val.size());
        for (const SampleRecord& rec : val) {
            SeededRng rng = SeededRng(cfg.train.seed)
                                .derive(RngPurpose::Eval, uint64_t(rec.sample_id), uint64_t(s));
            ImageGrid input = inference_input(rec.y_model, cfg.train.h, rng);
            ImageGrid xb = generator_forward(base, input);
            ImageGrid xg = generator_forward(guided, input);
            psnr_b += psnr(xb, rec.x0);
            psnr_g += psnr(xg, rec.x0);
            set_b.push_back(std::move(xb));
            set_g.push_back(std::move(xg));
        }
        out.psnr_base[s] = psnr_b / double(val.size());
        out.psnr_guided[s] = psnr_g / double(val.size());
        out.frechet_base[s] = frechet_desk(set_b, refs);
        out.frechet_guided[s] = frechet_desk(set_g, refs);
    });

    uint64_t total_evals = base.eval_count() + guided.eval_count();
    out.nfe_per_sample = double(total_evals) / double(2 * seeds * int(val.size()));

    out.delta_psnr.resize(size_t(seeds));
    out.delta_frechet.resize(size_t(seeds));
    for (int s = 0; s < seeds; ++s) {
        out.delta_psnr[size_t(s)] = out.psnr_guided[size_t(s)] - out.psnr_base[size_t(s)];
        out.delta_frechet[size_t(s)] = out.frechet_base[size_t(s)] - out.frechet_guided[size_t(s)];
    }

    try {
        out.t_psnr = paired_t_test(out.delta_psnr);
        out.t_frechet = paired_t_test(out.delta_frechet);
    } catch (const Error& e) {
        out.degenerate_note = e.what();
    }

    ensure_directory(out_dir);
    uint64_t chash = cfg.config_hash();
    out.metrics_csv = out_dir + "/metrics.csv";
    {
        CsvWriter csv(out.metrics_csv, chash,
                      {"seed", "psnr_base", "psnr_guided", "frechet_base", "frechet_guided",
                       "delta_psnr", "delta_frechet"});
        for (int s = 0; s < seeds; ++s) {
            csv.row({double(s), out.psnr_base[size_t(s)], out.psnr_guided[size_t(s)],
                     out.frechet_base[size_t(s)], out.frechet_guided[size_t(s)],
                     out.delta_psnr[size_t(s)], out.delta_frechet[size_t(s)]});
        }
    }
    {
        CsvWriter csv(out_dir + "/hist_delta_psnr.csv", chash, {"seed", "delta_psnr"});
        for (int s = 0; s < seeds; ++s) csv.row({double(s), out.delta_psnr[size_t(s)]});
    }
    {
        CsvWriter csv(out_dir + "/hist_delta_frechet.csv", chash, {"seed", "delta_frechet"});
        for (int s = 0; s < seeds; ++s) csv.row({double(s), out.delta_frechet[size_t(s)]});
    }

    json summary;
    summary["config_hash"] = chash;
    summary["experiment_hash"] = cfg.experiment_hash();
    summary["seeds"] = seeds;
    summary["val_count"] = val.size();
    summary["nfe_per_sample"] = out.nfe_per_sample;
    auto mean_of = [](const std::vector<double>& v) {
        double acc = 0.0;
        for (double x : v) acc += x;
        return acc / double(v.size());
    };
    summary["mean_psnr_base"] = mean_of(out.psnr_base);
    summary["mean_psnr_guided"] = mean_of(out.psnr_guided);
    summary["mean_frechet_base"] = mean_of(out.frechet_base);
    summary["mean_frechet_guided"] = mean_of(out.frechet_guided);
    summary["mean_delta_psnr"] = mean_of(out.delta_psnr);
    summary["mean_delta_frechet"] = mean_of(out.delta_frechet);
    if (out.t_psnr) {
        summary["p_value_psnr"] = out.t_psnr->p_value;
        summary["t_stat_psnr"] = out.t_psnr->t_stat;
        summary["p_value_frechet"] = out.t_frechet->p_value;
        summary["t_stat_frechet"] = out.t_frechet->t_stat;
    } else {
        summary["degenerate"] = out.degenerate_note;
    }
    out.summary_json = out_dir + "/summary.json";
    write_text_file(out.summary_json, summary.dump(2) + "\n");
    return out;
}

AblateOutput cmd_ablate(const ExperimentConfig& cfg, const std::string& sweep_param,
                        const std::vector<double>& values, const std::string& out_dir) {
    require(!values.empty(), ErrorKind::Config, "ablate: sweep values must be non-empty");
    require(sweep_param == "lambda" || sweep_param == "memory_window", ErrorKind::Config,
            "ablate: sweep parameter must be 'lambda' or 'memory_window'");
    ensure_directory(out_dir);
    ensure_directory(out_dir + "/checkpoints");

    ExperimentSetup setup = prepare_experiment(cfg);

    // Shared stage-1 checkpoint.
    Trainer stage1 = make_trainer(setup);
    stage1.run_stage(TrainStage::Base, cfg.train.stage1_iters);
    std::string s1_path = out_dir + "/checkpoints/stage1.ckpt";
    Checkpoint::from_trainer(stage1, cfg.config_hash(), cfg.experiment_hash(), false)
        .save(s1_path);

    // Control: base continuation (lambda = 0) from the shared stage-1 state.
    std::string base_path = out_dir + "/checkpoints/stage2_control.ckpt";
    {
        Trainer t = make_trainer(setup);
        Checkpoint::load(s1_path).restore_into(&t);
        t.init_memories();
        t.set_lambda(0.0);
        t.run_stage(TrainStage::Guided, cfg.train.stage2_iters);
        Checkpoint::from_trainer(t, cfg.config_hash(), cfg.experiment_hash(), true)
            .save(base_path);
    }

    AblateOutput out;
    out.curves_csv = out_dir + "/curves.csv";
    std::optional<CsvWriter> curves;
    if (cfg.eval.curve_interval > 0) {
        curves.emplace(out.curves_csv, cfg.config_hash(),
                       std::vector<std::string>{"value", "iteration", "psnr", "frechet"});
    }

    auto quick_eval = [&](const ParamModel& gen, int64_t iter, double key) {
        if (!curves) return;
        double psnr_acc = 0.0;
        std::vector<ImageGrid> set, refs;
        for (const SampleRecord& rec : setup.val_records) refs.push_back(rec.x0);
        int cseeds = cfg.eval.curve_seeds;
        for (int s = 0; s < cseeds; ++s) {
            for (const SampleRecord& rec : setup.val_records) {
                SeededRng rng = SeededRng(cfg.train.seed)
                                    .derive(RngPurpose::Eval, uint64_t(rec.sample_id),
                                            0x10000000ULL + uint64_t(s));
                ImageGrid input = inference_input(rec.y_model, cfg.train.h, rng);
                ImageGrid x = generator_forward(gen, input);
                psnr_acc += psnr(x, rec.x0);
                if (s == 0) set.push_back(std::move(x));
            }
        }
        double fre = frechet_desk(set, refs);
        curves->row({key, double(iter), psnr_acc / double(cseeds * setup.val_records.size()), fre});
    };

    for (double v : values) {
        double lambda = sweep_param == "lambda" ? v : cfg.train.lambda;
        int window = sweep_param == "memory_window" ? int(v) : cfg.train.memory_window;
        char tag[64];
        std::snprintf(tag, sizeof(tag), "/checkpoints/stage2_%s_%g.ckpt", sweep_param.c_str(), v);
        std::string ckpt_path = out_dir + tag;

        ExperimentConfig run_cfg = cfg;
        run_cfg.train.memory_window = window;
        ExperimentSetup run_setup = setup;
        run_setup.cfg = run_cfg;
        Trainer t = make_trainer(run_setup);
        Checkpoint::load(s1_path).restore_into(&t);
        t.init_memories();
        t.set_lambda(lambda);
        t.set_stage(TrainStage::Guided);
        for (int i = 0; i < cfg.train.stage2_iters; ++i) {
            t.train_step();
            if (curves && cfg.eval.curve_interval > 0 &&
                ((i + 1) % cfg.eval.curve_interval == 0 || i + 1 == cfg.train.stage2_iters)) {
                quick_eval(t.generator(), t.iteration(), v);
            }
        }
        Checkpoint::from_trainer(t, run_cfg.config_hash(), cfg.experiment_hash(), true)
            .save(ckpt_path);

        char evaldir[64];
        std::snprintf(evaldir, sizeof(evaldir), "/eval_%s_%g", sweep_param.c_str(), v);
        EvalOutput ev = cmd_eval(run_cfg, base_path, ckpt_path, out_dir + evaldir);
        AblateRow row;
        row.value = v;
        row.checkpoint = ckpt_path;
        double dp = 0.0, df = 0.0;
        for (double x : ev.delta_psnr) dp += x;
        for (double x : ev.delta_frechet) df += x;
        row.mean_delta_psnr = dp / double(ev.delta_psnr.size());
        row.mean_delta_frechet = df / double(ev.delta_frechet.size());
        if (ev.t_psnr) {
            row.p_psnr = ev.t_psnr->p_value;
            row.p_frechet = ev.t_frechet->p_value;
        }
        out.rows.push_back(row);
    }

    out.report_csv = out_dir + "/sweep_report.csv";
    {
        CsvWriter csv(out.report_csv, cfg.config_hash(),
                      {"value", "mean_delta_psnr", "mean_delta_frechet", "p_psnr", "p_frechet"});
        for (const AblateRow& row : out.rows) {
            csv.row({row.value, row.mean_delta_psnr, row.mean_delta_frechet, row.p_psnr,
                     row.p_frechet});
        }
    }
    const AblateRow* best_psnr = &out.rows[0];
    const AblateRow* best_frechet = &out.rows[0];
    for (const AblateRow& row : out.rows) {
        if (row.mean_delta_psnr > best_psnr->mean_delta_psnr) best_psnr = &row;
        if (row.mean_delta_frechet > best_frechet->mean_delta_frechet) best_frechet = &row;
    }
    out.best_value_psnr = best_psnr->value;
    out.best_value_frechet = best_frechet->value;
    json summary;
    summary["config_hash"] = cfg.config_hash();
    summary["sweep_param"] = sweep_param;
    summary["best_value_by_delta_psnr"] = out.best_value_psnr;
    summary["best_value_by_delta_frechet"] = out.best_value_frechet;
    out.summary_json = out_dir + "/sweep_summary.json";
    write_text_file(out.summary_json, summary.dump(2) + "\n");
    return out;
}

}  // namespace udavi
