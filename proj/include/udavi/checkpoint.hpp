#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "udavi/memory.hpp"
#include "udavi/model.hpp"
#include "udavi/optimizer.hpp"
#include "udavi/trainer.hpp"

namespace udavi {

// Versioned binary container: magic + JSON header + raw little-endian double
// payload. Holds both model parameter vectors, both optimizer states, the
// schedule betas, and the per-sample memory bank, so a resumed stage-2 run is
// bit-identical to an in-process continuation.
struct Checkpoint {
    static constexpr const char* kMagic = "UDAVCKP1";

    uint32_t version = 1;
    uint64_t config_hash = 0;
    uint64_t experiment_hash = 0;
    std::string stage;  // "base" | "guided"
    int64_t iteration = 0;

    ArchDescriptor generator_arch;
    ArchDescriptor student_arch;
    std::vector<double> generator_params;
    std::vector<double> student_params;

    std::vector<double> gen_m, gen_v;
    std::vector<double> stu_m, stu_v;
    int64_t gen_opt_step = 0;
    int64_t stu_opt_step = 0;

    std::vector<double> schedule_betas;

    // Memory bank (empty for stage-1 checkpoints saved before memory init).
    bool has_memory = false;
    std::vector<int64_t> memory_ids;
    std::vector<ImageGrid> memories;       // memory-space H x W x C
    std::vector<ImageGrid> uncertainties;  // H x W x 1

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);

    static Checkpoint from_trainer(const Trainer& trainer, uint64_t config_hash,
                                   uint64_t experiment_hash, bool include_memory);
    // Pushes params/optimizer/memory back into a freshly constructed trainer.
    void restore_into(Trainer* trainer) const;
};

}  // namespace udavi
