#include "udavi/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "udavi/artifacts.hpp"

namespace udavi {

using nlohmann::json;

namespace {

// Tracks which keys were consumed and rejects leftovers, so hyperparameter
// typos fail loudly instead of silently using defaults.
class StrictObject {
public:
    StrictObject(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail_config(path_ + ": expected a JSON object");
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key);
    }

    const json& get(const std::string& key) {
        seen_.insert(key);
        if (!j_.contains(key)) fail_config(path_ + "." + key + ": missing required field");
        return j_.at(key);
    }

    template <typename T>
    T value(const std::string& key, T fallback) {
        seen_.insert(key);
        if (!j_.contains(key)) return fallback;
        return read<T>(key);
    }

    template <typename T>
    T required(const std::string& key) {
        seen_.insert(key);
        if (!j_.contains(key)) fail_config(path_ + "." + key + ": missing required field");
        return read<T>(key);
    }

    void finish() {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) {
                fail_config(path_ + "." + it.key() + ": unknown field");
            }
        }
    }

    const std::string& path() const { return path_; }

private:
    template <typename T>
    T read(const std::string& key) {
        try {
            return j_.at(key).get<T>();
        } catch (const json::exception&) {
            fail_config(path_ + "." + key + ": wrong type");
        }
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

}  // namespace

const char* task_name(TaskKind t) { return t == TaskKind::Deblur ? "deblur" : "superres"; }

const char* dataset_kind_name(DatasetKind k) {
    switch (k) {
        case DatasetKind::GaussianPriorDraws: return "gaussian";
        case DatasetKind::GMMDraws: return "gmm";
        case DatasetKind::ProceduralTextures: return "textures";
    }
    return "?";
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail_io("cannot open config file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        fail_config("config " + path + ": invalid JSON: " + e.what());
    }
    return from_json(j);
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    ExperimentConfig cfg;
    StrictObject root(j, "config");

    std::string task = root.required<std::string>("task");
    if (task == "deblur") {
        cfg.task = TaskKind::Deblur;
    } else if (task == "superres") {
        cfg.task = TaskKind::SuperRes;
    } else {
        fail_config("config.task: must be 'deblur' or 'superres'");
    }

    {
        StrictObject op(root.get("operator"), "config.operator");
        cfg.op.kernel_size = op.value<int>("kernel_size", cfg.op.kernel_size);
        cfg.op.kernel_sigma = op.value<double>("kernel_sigma", cfg.op.kernel_sigma);
        cfg.op.sr_factor = op.value<int>("sr_factor", cfg.op.sr_factor);
        cfg.op.noise_sigma = op.required<double>("noise_sigma");
        op.finish();
    }
    {
        StrictObject sc(root.get("schedule"), "config.schedule");
        cfg.schedule.timesteps = sc.required<int>("timesteps");
        cfg.schedule.beta_start = sc.value<double>("beta_start", cfg.schedule.beta_start);
        cfg.schedule.beta_end = sc.value<double>("beta_end", cfg.schedule.beta_end);
        sc.finish();
    }
    {
        StrictObject ds(root.get("dataset"), "config.dataset");
        std::string kind = ds.required<std::string>("kind");
        if (kind == "gaussian") {
            cfg.dataset.kind = DatasetKind::GaussianPriorDraws;
        } else if (kind == "gmm") {
            cfg.dataset.kind = DatasetKind::GMMDraws;
        } else if (kind == "textures") {
            cfg.dataset.kind = DatasetKind::ProceduralTextures;
        } else {
            fail_config("config.dataset.kind: must be 'gaussian', 'gmm' or 'textures'");
        }
        cfg.dataset.count = ds.required<int>("count");
        cfg.dataset.height = ds.required<int>("height");
        cfg.dataset.width = ds.required<int>("width");
        cfg.dataset.channels = ds.value<int>("channels", 1);
        cfg.dataset.seed = ds.required<uint64_t>("seed");
        cfg.dataset.val_fraction = ds.value<double>("val_fraction", 0.2);
        ds.finish();
    }
    {
        StrictObject pr(root.get("prior"), "config.prior");
        std::string kind = pr.required<std::string>("kind");
        if (kind == "isotropic") {
            cfg.prior.kind = PriorKind::Isotropic;
            cfg.prior.std_dev = pr.required<double>("std");
            cfg.prior.mean_kind = pr.value<std::string>("mean_kind", "zero");
            cfg.prior.mean_scale = pr.value<double>("mean_scale", 0.0);
        } else if (kind == "gmm") {
            cfg.prior.kind = PriorKind::Gmm;
            const json& comps = pr.get("components");
            if (!comps.is_array() || comps.empty()) {
                fail_config("config.prior.components: must be a non-empty array");
            }
            for (size_t i = 0; i < comps.size(); ++i) {
                StrictObject co(comps[i], "config.prior.components[" + std::to_string(i) + "]");
                PriorComponentConfig pc;
                pc.weight = co.required<double>("weight");
                pc.std_dev = co.required<double>("std");
                pc.mean_kind = co.value<std::string>("mean_kind", "zero");
                pc.mean_scale = co.value<double>("mean_scale", 0.0);
                co.finish();
                cfg.prior.components.push_back(pc);
            }
        } else if (kind == "fit") {
            cfg.prior.kind = PriorKind::FitToTrain;
            cfg.prior.shrinkage = pr.value<double>("shrinkage", 0.5);
        } else {
            fail_config("config.prior.kind: must be 'isotropic', 'gmm' or 'fit'");
        }
        pr.finish();
    }
    {
        StrictObject mo(root.get("model"), "config.model");
        cfg.model.generator_kind = mo.required<std::string>("generator");
        cfg.model.student_kind = mo.required<std::string>("student");
        cfg.model.base_channels = mo.value<int>("base_channels", 8);
        cfg.model.levels = mo.value<int>("levels", 3);
        cfg.model.generator_init = mo.value<std::string>("generator_init", "identity");
        cfg.model.student_init = mo.value<std::string>("student_init", "zero");
        mo.finish();
    }
    {
        StrictObject tr(root.get("train"), "config.train");
        cfg.train.gamma = tr.required<double>("gamma");
        cfg.train.lambda = tr.required<double>("lambda");
        cfg.train.h = tr.required<double>("h");
        cfg.train.memory_window = tr.value<int>("memory_window", 8);
        cfg.train.batch_size = tr.required<int>("batch_size");
        cfg.train.learning_rate = tr.required<double>("learning_rate");
        cfg.train.student_learning_rate = tr.value<double>("student_learning_rate", 0.0);
        cfg.train.weight_decay = tr.value<double>("weight_decay", 0.0);
        cfg.train.bridge_beta_alpha = tr.value<double>("bridge_beta_alpha", 3.0);
        cfg.train.stage1_iters = tr.required<int>("stage1_iters");
        cfg.train.stage2_iters = tr.required<int>("stage2_iters");
        cfg.train.seed = tr.required<uint64_t>("seed");
        cfg.train.prior_term = tr.value<bool>("prior_term", true);
        cfg.train.grad_clip_norm = tr.value<double>("grad_clip_norm", 0.0);
        cfg.train.divergence_threshold = tr.value<double>("divergence_threshold", 1e6);
        tr.finish();
    }
    {
        StrictObject ev(root.get("eval"), "config.eval");
        cfg.eval.seeds = ev.value<int>("seeds", 100);
        cfg.eval.curve_interval = ev.value<int>("curve_interval", 0);
        cfg.eval.curve_seeds = ev.value<int>("curve_seeds", 2);
        ev.finish();
    }
    cfg.out_dir = root.value<std::string>("out_dir", cfg.out_dir);
    root.finish();
    cfg.validate();
    return cfg;
}

json ExperimentConfig::to_json() const {
    json j;
    j["task"] = task_name(task);
    json& op_j = j["operator"];
    op_j["noise_sigma"] = op.noise_sigma;
    if (task == TaskKind::Deblur) {
        op_j["kernel_size"] = op.kernel_size;
        op_j["kernel_sigma"] = op.kernel_sigma;
    } else {
        op_j["sr_factor"] = op.sr_factor;
    }
    j["schedule"] = {{"timesteps", schedule.timesteps},
                     {"beta_start", schedule.beta_start},
                     {"beta_end", schedule.beta_end}};
    j["dataset"] = {{"kind", dataset_kind_name(dataset.kind)}, {"count", dataset.count},
                    {"height", dataset.height},               {"width", dataset.width},
                    {"channels", dataset.channels},           {"seed", dataset.seed},
                    {"val_fraction", dataset.val_fraction}};
    json prior_j;
    if (prior.kind == PriorKind::Isotropic) {
        prior_j = {{"kind", "isotropic"},
                   {"std", prior.std_dev},
                   {"mean_kind", prior.mean_kind},
                   {"mean_scale", prior.mean_scale}};
    } else if (prior.kind == PriorKind::Gmm) {
        prior_j["kind"] = "gmm";
        json comps = json::array();
        for (const auto& c : prior.components) {
            comps.push_back({{"weight", c.weight},
                             {"std", c.std_dev},
                             {"mean_kind", c.mean_kind},
                             {"mean_scale", c.mean_scale}});
        }
        prior_j["components"] = comps;
    } else {
        prior_j = {{"kind", "fit"}, {"shrinkage", prior.shrinkage}};
    }
    j["prior"] = prior_j;
    j["model"] = {{"generator", model.generator_kind},
                  {"student", model.student_kind},
                  {"base_channels", model.base_channels},
                  {"levels", model.levels},
                  {"generator_init", model.generator_init},
                  {"student_init", model.student_init}};
    j["train"] = {{"gamma", train.gamma},
                  {"lambda", train.lambda},
                  {"h", train.h},
                  {"memory_window", train.memory_window},
                  {"batch_size", train.batch_size},
                  {"learning_rate", train.learning_rate},
                  {"student_learning_rate", train.student_learning_rate},
                  {"weight_decay", train.weight_decay},
                  {"bridge_beta_alpha", train.bridge_beta_alpha},
                  {"stage1_iters", train.stage1_iters},
                  {"stage2_iters", train.stage2_iters},
                  {"seed", train.seed},
                  {"prior_term", train.prior_term},
                  {"grad_clip_norm", train.grad_clip_norm},
                  {"divergence_threshold", train.divergence_threshold}};
    j["eval"] = {{"seeds", eval.seeds},
                 {"curve_interval", eval.curve_interval},
                 {"curve_seeds", eval.curve_seeds}};
    j["out_dir"] = out_dir;
    return j;
}

uint64_t ExperimentConfig::config_hash() const {
    json j = to_json();
    j.erase("out_dir");
    std::string dump = j.dump();
    return fnv1a(dump.data(), dump.size());
}

uint64_t ExperimentConfig::experiment_hash() const {
    json j = to_json();
    j.erase("out_dir");
    j["train"].erase("lambda");
    j["train"].erase("stage2_iters");
    j["train"].erase("memory_window");
    std::string dump = j.dump();
    return fnv1a(dump.data(), dump.size());
}

void ExperimentConfig::validate() const {
    if (task == TaskKind::Deblur) {
        require(op.kernel_size >= 1 && op.kernel_size % 2 == 1, ErrorKind::Config,
                "config.operator.kernel_size: must be odd and positive");
        require(op.kernel_sigma > 0.0, ErrorKind::Config,
                "config.operator.kernel_sigma: must be positive");
    } else {
        require(op.sr_factor >= 1, ErrorKind::Config,
                "config.operator.sr_factor: must be a positive integer");
        require(dataset.height % op.sr_factor == 0 && dataset.width % op.sr_factor == 0,
                ErrorKind::Config, "config.operator.sr_factor: must divide the dataset dims");
    }
    require(op.noise_sigma >= 0.0, ErrorKind::Config,
            "config.operator.noise_sigma: must be >= 0");
    require(schedule.timesteps >= 1, ErrorKind::Config,
            "config.schedule.timesteps: must be >= 1");
    require(schedule.beta_start > 0.0 && schedule.beta_start <= schedule.beta_end &&
                schedule.beta_end < 1.0,
            ErrorKind::Config, "config.schedule: requires 0 < beta_start <= beta_end < 1");
    require(dataset.count >= 1, ErrorKind::Config, "config.dataset.count: must be >= 1");
    require(dataset.height > 0 && dataset.width > 0 && dataset.channels > 0, ErrorKind::Config,
            "config.dataset: dims must be positive");
    require(dataset.val_fraction > 0.0 && dataset.val_fraction < 1.0, ErrorKind::Config,
            "config.dataset.val_fraction: must lie strictly between 0 and 1");
    if (prior.kind == PriorKind::Isotropic) {
        require(prior.std_dev > 0.0, ErrorKind::Config, "config.prior.std: must be positive");
    }
    if (prior.kind == PriorKind::FitToTrain) {
        require(prior.shrinkage > 0.0 && prior.shrinkage <= 1.0, ErrorKind::Config,
                "config.prior.shrinkage: must lie in (0, 1]");
    }
    if (prior.kind == PriorKind::Gmm) {
        double wsum = 0.0;
        for (const auto& c : prior.components) {
            require(c.weight > 0.0, ErrorKind::Config,
                    "config.prior.components.weight: must be positive");
            require(c.std_dev > 0.0, ErrorKind::Config,
                    "config.prior.components.std: must be positive");
            wsum += c.weight;
        }
        require(std::abs(wsum - 1.0) <= 1e-9, ErrorKind::Config,
                "config.prior.components: weights must sum to 1");
    }
    require(model.generator_kind == "affine" || model.generator_kind == "conv",
            ErrorKind::Config, "config.model.generator: must be 'affine' or 'conv'");
    require(model.student_kind == "diag_time" || model.student_kind == "conv",
            ErrorKind::Config, "config.model.student: must be 'diag_time' or 'conv'");
    require(model.generator_init == "zero" || model.generator_init == "identity" ||
                model.generator_init == "random",
            ErrorKind::Config, "config.model.generator_init: must be zero|identity|random");
    require(model.student_init == "zero" || model.student_init == "teacher", ErrorKind::Config,
            "config.model.student_init: must be zero|teacher");
    require(model.student_init != "teacher" || model.student_kind == "diag_time",
            ErrorKind::Config,
            "config.model.student_init: teacher init needs the diag_time student");
    train.validate();
    require(eval.seeds >= 2, ErrorKind::Config, "config.eval.seeds: must be >= 2");
    require(eval.curve_interval >= 0, ErrorKind::Config,
            "config.eval.curve_interval: must be >= 0");
    require(eval.curve_seeds >= 1, ErrorKind::Config, "config.eval.curve_seeds: must be >= 1");
    if (dataset.kind != DatasetKind::ProceduralTextures) {
        require(prior.kind != PriorKind::FitToTrain, ErrorKind::Config,
                "config.prior.kind: 'fit' only applies to texture datasets");
    }
}

}  // namespace udavi
