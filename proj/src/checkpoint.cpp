#include "udavi/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

namespace udavi {

using nlohmann::json;

namespace {

json arch_to_json(const ArchDescriptor& a) {
    return json{{"kind", a.kind_name()},
                {"in_height", a.in_height},
                {"in_width", a.in_width},
                {"in_channels", a.in_channels},
                {"out_channels", a.out_channels},
                {"base_channels", a.base_channels},
                {"levels", a.levels},
                {"squash_output", a.squash_output},
                {"input_skip", a.input_skip},
                {"time_channel", a.time_channel},
                {"timesteps", a.timesteps}};
}

ArchDescriptor arch_from_json(const json& j) {
    ArchDescriptor a;
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "affine") {
        a.kind = ArchKind::Affine;
    } else if (kind == "conv") {
        a.kind = ArchKind::Conv;
    } else if (kind == "diag_time") {
        a.kind = ArchKind::DiagTime;
    } else {
        fail_io("checkpoint: unknown architecture kind " + kind);
    }
    a.in_height = j.at("in_height").get<int>();
    a.in_width = j.at("in_width").get<int>();
    a.in_channels = j.at("in_channels").get<int>();
    a.out_channels = j.at("out_channels").get<int>();
    a.base_channels = j.at("base_channels").get<int>();
    a.levels = j.at("levels").get<int>();
    a.squash_output = j.at("squash_output").get<bool>();
    a.input_skip = j.at("input_skip").get<bool>();
    a.time_channel = j.at("time_channel").get<bool>();
    a.timesteps = j.at("timesteps").get<int>();
    return a;
}

void write_block(std::ofstream& out, const std::vector<double>& v) {
    out.write(reinterpret_cast<const char*>(v.data()), std::streamsize(v.size() * sizeof(double)));
}

void read_block(std::ifstream& in, std::vector<double>* v, size_t n) {
    v->resize(n);
    in.read(reinterpret_cast<char*>(v->data()), std::streamsize(n * sizeof(double)));
}

}  // namespace

void Checkpoint::save(const std::string& path) const {
    json header;
    header["version"] = version;
    header["config_hash"] = config_hash;
    header["experiment_hash"] = experiment_hash;
    header["stage"] = stage;
    header["iteration"] = iteration;
    header["generator_arch"] = arch_to_json(generator_arch);
    header["student_arch"] = arch_to_json(student_arch);
    header["gen_opt_step"] = gen_opt_step;
    header["stu_opt_step"] = stu_opt_step;
    header["n_gen_params"] = generator_params.size();
    header["n_stu_params"] = student_params.size();
    header["n_betas"] = schedule_betas.size();
    header["has_memory"] = has_memory;
    header["n_records"] = memory_ids.size();
    if (has_memory && !memories.empty()) {
        header["mem_height"] = memories[0].height;
        header["mem_width"] = memories[0].width;
        header["mem_channels"] = memories[0].channels;
    }
    std::string hdr = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) fail_io("cannot open checkpoint " + path + " for writing");
    out.write(kMagic, 8);
    uint64_t hlen = hdr.size();
    out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    out.write(hdr.data(), std::streamsize(hdr.size()));
    write_block(out, generator_params);
    write_block(out, student_params);
    write_block(out, gen_m);
    write_block(out, gen_v);
    write_block(out, stu_m);
    write_block(out, stu_v);
    write_block(out, schedule_betas);
    if (has_memory) {
        out.write(reinterpret_cast<const char*>(memory_ids.data()),
                  std::streamsize(memory_ids.size() * sizeof(int64_t)));
        for (const ImageGrid& g : memories) write_block(out, g.values);
        for (const ImageGrid& g : uncertainties) write_block(out, g.values);
    }
    if (!out) fail_io("failed writing checkpoint " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_io("cannot open checkpoint " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) {
        fail_io("not a checkpoint file: " + path);
    }
    uint64_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    std::string hdr(hlen, '\0');
    in.read(hdr.data(), std::streamsize(hlen));
    if (!in) fail_io("truncated checkpoint header in " + path);
    json header;
    try {
        header = json::parse(hdr);
    } catch (const json::exception& e) {
        fail_io("corrupt checkpoint header in " + path + ": " + e.what());
    }

    Checkpoint ck;
    ck.version = header.at("version").get<uint32_t>();
    require(ck.version == 1, ErrorKind::Io, "unsupported checkpoint version");
    ck.config_hash = header.at("config_hash").get<uint64_t>();
    ck.experiment_hash = header.at("experiment_hash").get<uint64_t>();
    ck.stage = header.at("stage").get<std::string>();
    ck.iteration = header.at("iteration").get<int64_t>();
    ck.generator_arch = arch_from_json(header.at("generator_arch"));
    ck.student_arch = arch_from_json(header.at("student_arch"));
    ck.gen_opt_step = header.at("gen_opt_step").get<int64_t>();
    ck.stu_opt_step = header.at("stu_opt_step").get<int64_t>();
    size_t n_gen = header.at("n_gen_params").get<size_t>();
    size_t n_stu = header.at("n_stu_params").get<size_t>();
    size_t n_betas = header.at("n_betas").get<size_t>();
    ck.has_memory = header.at("has_memory").get<bool>();
    size_t n_records = header.at("n_records").get<size_t>();

    read_block(in, &ck.generator_params, n_gen);
    read_block(in, &ck.student_params, n_stu);
    read_block(in, &ck.gen_m, n_gen);
    read_block(in, &ck.gen_v, n_gen);
    read_block(in, &ck.stu_m, n_stu);
    read_block(in, &ck.stu_v, n_stu);
    read_block(in, &ck.schedule_betas, n_betas);
    if (ck.has_memory) {
        int mh = header.at("mem_height").get<int>();
        int mw = header.at("mem_width").get<int>();
        int mc = header.at("mem_channels").get<int>();
        ck.memory_ids.resize(n_records);
        in.read(reinterpret_cast<char*>(ck.memory_ids.data()),
                std::streamsize(n_records * sizeof(int64_t)));
        ck.memories.reserve(n_records);
        ck.uncertainties.reserve(n_records);
        for (size_t i = 0; i < n_records; ++i) {
            ImageGrid g(mh, mw, mc, RangeTag::MemorySpace);
            read_block(in, &g.values, g.size());
            ck.memories.push_back(std::move(g));
        }
        for (size_t i = 0; i < n_records; ++i) {
            ImageGrid g(mh, mw, 1, RangeTag::MemorySpace);
            read_block(in, &g.values, g.size());
            ck.uncertainties.push_back(std::move(g));
        }
    }
    if (!in) fail_io("truncated checkpoint payload in " + path);
    return ck;
}

Checkpoint Checkpoint::from_trainer(const Trainer& trainer, uint64_t config_hash,
                                    uint64_t experiment_hash, bool include_memory) {
    Checkpoint ck;
    ck.config_hash = config_hash;
    ck.experiment_hash = experiment_hash;
    ck.stage = stage_name(trainer.stage());
    ck.iteration = trainer.iteration();
    ck.generator_arch = trainer.generator().arch();
    ck.student_arch = trainer.student().arch();
    ck.generator_params = trainer.generator().params();
    ck.student_params = trainer.student().params();
    ck.gen_m = trainer.generator_opt().moment1();
    ck.gen_v = trainer.generator_opt().moment2();
    ck.stu_m = trainer.student_opt().moment1();
    ck.stu_v = trainer.student_opt().moment2();
    ck.gen_opt_step = trainer.generator_opt().step_count();
    ck.stu_opt_step = trainer.student_opt().step_count();
    ck.schedule_betas = trainer.schedule().betas();
    if (include_memory) {
        ck.has_memory = true;
        for (const SampleRecord& rec : trainer.records()) {
            ck.memory_ids.push_back(rec.sample_id);
            ck.memories.push_back(rec.memory);
            ck.uncertainties.push_back(rec.uncertainty);
        }
    }
    return ck;
}

void Checkpoint::restore_into(Trainer* trainer) const {
    require(trainer->generator().params().size() == generator_params.size(), ErrorKind::Config,
            "checkpoint/architecture mismatch: generator parameter count");
    require(trainer->student().params().size() == student_params.size(), ErrorKind::Config,
            "checkpoint/architecture mismatch: student parameter count");
    require(trainer->schedule().betas() == schedule_betas, ErrorKind::Config,
            "checkpoint/schedule mismatch: betas differ");
    trainer->generator().params() = generator_params;
    trainer->student().params() = student_params;
    trainer->generator_opt().restore(gen_m, gen_v, gen_opt_step);
    trainer->student_opt().restore(stu_m, stu_v, stu_opt_step);
    trainer->set_iteration(iteration);
    trainer->set_stage(stage == "guided" ? TrainStage::Guided : TrainStage::Base);
    if (has_memory) {
        auto& records = trainer->records();
        require(records.size() == memory_ids.size(), ErrorKind::Config,
                "checkpoint/dataset mismatch: record count");
        for (size_t i = 0; i < records.size(); ++i) {
            // Bank is keyed by sample id; find the record with this id.
            bool found = false;
            for (SampleRecord& rec : records) {
                if (rec.sample_id == memory_ids[i]) {
                    rec.memory = memories[i];
                    rec.uncertainty = uncertainties[i];
                    found = true;
                    break;
                }
            }
            require(found, ErrorKind::Config,
                    "checkpoint/dataset mismatch: unknown sample id " +
                        std::to_string(memory_ids[i]));
        }
    }
}

}  // namespace udavi
