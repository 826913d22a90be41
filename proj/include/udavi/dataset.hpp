#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "udavi/memory.hpp"
#include "udavi/prior.hpp"
#include "udavi/rng.hpp"

namespace udavi {

enum class DatasetKind { GaussianPriorDraws, GMMDraws, ProceduralTextures };

struct DatasetSpec {
    DatasetKind kind = DatasetKind::GaussianPriorDraws;
    int count = 0;
    int height = 0;
    int width = 0;
    int channels = 1;
    uint64_t seed = 0;

    void validate() const;
};

struct SynthResult {
    std::vector<SampleRecord> records;  // x0 filled; y left empty
    double clamp_rate = 0.0;            // fraction of values clamped into [-1,1]
};

// Draws ground-truth images. Gaussian/GMM kinds sample the given prior and
// clamp into model space (the clamp rate is reported so configs can keep it
// below the level where the analytic oracle stays valid). Procedural textures
// are seeded sinusoid gratings with step edges and fine detail.
SynthResult synth_dataset(const DatasetSpec& spec, const GaussianPrior* prior, SeededRng rng);

// Disjoint, exhaustive, seeded split. Errors when either side is empty.
std::pair<std::vector<SampleRecord>, std::vector<SampleRecord>> train_val_split(
    std::vector<SampleRecord> records, double val_fraction, SeededRng rng);

}  // namespace udavi
