#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "udavi/grid.hpp"
#include "udavi/rng.hpp"
#include "udavi/schedule.hpp"

namespace udavi {

// The fixed architecture family. Affine covers the linear-conjugate lane
// (it can represent the exact Gaussian posterior-mean map); Conv is a small
// encoder-decoder with skip connections for the texture tasks; DiagTime is a
// per-timestep diagonal affine map used as the score student in the linear
// lane, where the diffused marginals stay axis-aligned Gaussian.
enum class ArchKind { Affine, Conv, DiagTime };

enum class InitMode { Zero, Identity, Random };

struct ArchDescriptor {
    ArchKind kind = ArchKind::Affine;
    int in_height = 0;
    int in_width = 0;
    int in_channels = 0;
    int out_channels = 0;      // defaults to in_channels
    int base_channels = 8;     // conv
    int levels = 3;            // conv encoder depth
    bool squash_output = false;  // tanh on the output
    bool input_skip = false;     // add the raw input before the squash
    bool time_channel = false;   // append a broadcast t/T channel to the input
    int timesteps = 0;           // DiagTime table size

    size_t param_count() const;
    void validate() const;
    std::string kind_name() const;
};

// A model is its architecture descriptor plus a flat parameter vector.
// Forward is deterministic given (params, input); gradients are exact
// reverse-mode, derived layer by layer and finite-difference checked.
class ParamModel {
public:
    // Opaque record of one forward pass, consumed by backward().
    struct Tape {
        ImageGrid input_aug;               // input with any time channel appended
        ImageGrid input_raw;               // as given
        std::vector<ImageGrid> enc_inputs;  // conv input per encoder layer
        std::vector<ImageGrid> enc_pre;     // pre-activation per encoder layer
        std::vector<ImageGrid> enc_act;     // activation per encoder layer
        std::vector<ImageGrid> dec_inputs;  // conv input per decoder layer (upsampled)
        std::vector<ImageGrid> dec_pre;
        std::vector<ImageGrid> dec_sum;     // act + skip
        ImageGrid out_conv_input;
        ImageGrid pre_squash;
        ImageGrid output;
        int t = 0;
    };

    ParamModel() = default;
    static ParamModel create(const ArchDescriptor& arch, InitMode init, SeededRng init_rng);

    ParamModel(const ParamModel& other);
    ParamModel& operator=(const ParamModel& other);
    ParamModel(ParamModel&&) noexcept;
    ParamModel& operator=(ParamModel&&) noexcept;

    const ArchDescriptor& arch() const { return arch_; }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    // t/sched are required when the architecture is time-conditioned.
    ImageGrid forward(const ImageGrid& input, int t = 0, const ScheduleTable* sched = nullptr) const;
    ImageGrid forward_tape(const ImageGrid& input, Tape* tape, int t = 0,
                           const ScheduleTable* sched = nullptr) const;
    // Accumulates dL/dparams into param_grad (size param_count); optionally
    // computes dL/dinput. Errors with the failing layer on non-finite values.
    void backward(const Tape& tape, const ImageGrid& output_cotangent,
                  std::span<double> param_grad, ImageGrid* input_grad = nullptr) const;

    uint64_t eval_count() const { return evals_.load(std::memory_order_relaxed); }
    void reset_eval_count() { evals_.store(0, std::memory_order_relaxed); }

private:
    ArchDescriptor arch_;
    std::vector<double> params_;
    mutable std::atomic<uint64_t> evals_{0};
};

// Generator pass: reconstruction from a bridge input, tagged model-space.
ImageGrid generator_forward(const ParamModel& gen, const ImageGrid& y_a);

// Student score: the network predicts the noise eps_hat; the score is
// -eps_hat / sqrt(1 - alpha_bar_t).
ImageGrid student_score(const ParamModel& student, const ImageGrid& x_t, int t,
                        const ScheduleTable& sched);

// Convenience for gradient tests: runs forward, evaluates the loss and its
// output cotangent, then backpropagates. Returns the loss value.
using LossWithCotangent = std::function<double(const ImageGrid& out, ImageGrid* cotangent)>;
double param_grad(const ParamModel& model, const ImageGrid& input, int t,
                  const ScheduleTable* sched, const LossWithCotangent& loss,
                  std::vector<double>* grad_out);

}  // namespace udavi
