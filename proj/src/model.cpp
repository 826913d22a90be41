#include "udavi/model.hpp"

#include <cmath>

namespace udavi {

namespace {

struct ConvSpec {
    int in_ch;
    int out_ch;
};

// Encoder convs bottom-up, then decoder convs top-down, then the output conv.
std::vector<ConvSpec> conv_layers(const ArchDescriptor& a) {
    std::vector<ConvSpec> layers;
    int cin = a.in_channels + (a.time_channel ? 1 : 0);
    int prev = cin;
    for (int l = 0; l < a.levels; ++l) {
        int ch = a.base_channels << l;
        layers.push_back({prev, ch});
        prev = ch;
    }
    for (int l = a.levels - 2; l >= 0; --l) {
        int ch = a.base_channels << l;
        layers.push_back({prev, ch});
        prev = ch;
    }
    layers.push_back({prev, a.out_channels});
    return layers;
}

size_t conv_param_count(const ArchDescriptor& a) {
    size_t n = 0;
    for (const ConvSpec& l : conv_layers(a)) {
        n += size_t(l.out_ch) * l.in_ch * 9 + size_t(l.out_ch);
    }
    return n;
}

inline double silu(double x) {
    double s = 1.0 / (1.0 + std::exp(-x));
    return x * s;
}

inline double silu_grad(double x) {
    double s = 1.0 / (1.0 + std::exp(-x));
    return s * (1.0 + x * (1.0 - s));
}

void conv3x3_forward(const ImageGrid& in, const double* kernel, const double* bias, int out_ch,
                     ImageGrid* out) {
    int h = in.height, w = in.width, ic = in.channels;
    *out = ImageGrid(h, w, out_ch, RangeTag::Unbounded);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            for (int oc = 0; oc < out_ch; ++oc) {
                double acc = bias[oc];
                for (int kr = 0; kr < 3; ++kr) {
                    int rr = r + kr - 1;
                    if (rr < 0 || rr >= h) continue;
                    for (int kc = 0; kc < 3; ++kc) {
                        int cc = c + kc - 1;
                        if (cc < 0 || cc >= w) continue;
                        const double* kbase = kernel + size_t(oc) * ic * 9;
                        for (int i = 0; i < ic; ++i) {
                            acc += kbase[size_t(i) * 9 + kr * 3 + kc] * in.at(rr, cc, i);
                        }
                    }
                }
                out->at(r, c, oc) = acc;
            }
        }
    }
}

void conv3x3_backward(const ImageGrid& in, const double* kernel, int out_ch, const ImageGrid& gout,
                      ImageGrid* gin, double* gkernel, double* gbias) {
    int h = in.height, w = in.width, ic = in.channels;
    if (gin) *gin = ImageGrid::zeros(h, w, ic, RangeTag::Unbounded);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            for (int oc = 0; oc < out_ch; ++oc) {
                double g = gout.at(r, c, oc);
                if (g == 0.0) continue;
                gbias[oc] += g;
                for (int kr = 0; kr < 3; ++kr) {
                    int rr = r + kr - 1;
                    if (rr < 0 || rr >= h) continue;
                    for (int kc = 0; kc < 3; ++kc) {
                        int cc = c + kc - 1;
                        if (cc < 0 || cc >= w) continue;
                        const double* kbase = kernel + size_t(oc) * ic * 9;
                        double* gkbase = gkernel + size_t(oc) * ic * 9;
                        for (int i = 0; i < ic; ++i) {
                            gkbase[size_t(i) * 9 + kr * 3 + kc] += in.at(rr, cc, i) * g;
                            if (gin) gin->at(rr, cc, i) += kbase[size_t(i) * 9 + kr * 3 + kc] * g;
                        }
                    }
                }
            }
        }
    }
}

ImageGrid pool2(const ImageGrid& in) {
    ImageGrid out(in.height / 2, in.width / 2, in.channels, RangeTag::Unbounded);
    for (int r = 0; r < out.height; ++r)
        for (int c = 0; c < out.width; ++c)
            for (int ch = 0; ch < in.channels; ++ch)
                out.at(r, c, ch) = 0.25 * (in.at(2 * r, 2 * c, ch) + in.at(2 * r, 2 * c + 1, ch) +
                                           in.at(2 * r + 1, 2 * c, ch) +
                                           in.at(2 * r + 1, 2 * c + 1, ch));
    return out;
}

ImageGrid pool2_backward(const ImageGrid& gout) {
    ImageGrid gin(gout.height * 2, gout.width * 2, gout.channels, RangeTag::Unbounded);
    for (int r = 0; r < gout.height; ++r)
        for (int c = 0; c < gout.width; ++c)
            for (int ch = 0; ch < gout.channels; ++ch) {
                double g = 0.25 * gout.at(r, c, ch);
                gin.at(2 * r, 2 * c, ch) = g;
                gin.at(2 * r, 2 * c + 1, ch) = g;
                gin.at(2 * r + 1, 2 * c, ch) = g;
                gin.at(2 * r + 1, 2 * c + 1, ch) = g;
            }
    return gin;
}

ImageGrid up2(const ImageGrid& in) {
    ImageGrid out(in.height * 2, in.width * 2, in.channels, RangeTag::Unbounded);
    for (int r = 0; r < out.height; ++r)
        for (int c = 0; c < out.width; ++c)
            for (int ch = 0; ch < in.channels; ++ch) out.at(r, c, ch) = in.at(r / 2, c / 2, ch);
    return out;
}

ImageGrid up2_backward(const ImageGrid& gout) {
    ImageGrid gin(gout.height / 2, gout.width / 2, gout.channels, RangeTag::Unbounded);
    for (int r = 0; r < gout.height; ++r)
        for (int c = 0; c < gout.width; ++c)
            for (int ch = 0; ch < gout.channels; ++ch)
                gin.at(r / 2, c / 2, ch) += gout.at(r, c, ch);
    return gin;
}

void check_layer_finite(const ImageGrid& g, const char* layer) {
    for (double v : g.values) {
        if (!std::isfinite(v)) {
            fail_numeric(std::string("model: non-finite intermediate at layer ") + layer);
        }
    }
}

}  // namespace

size_t ArchDescriptor::param_count() const {
    int d_in = in_height * in_width * in_channels;
    switch (kind) {
        case ArchKind::Affine: {
            int din = d_in + (time_channel ? 1 : 0);
            int dout = in_height * in_width * out_channels;
            return size_t(dout) * din + size_t(dout);
        }
        case ArchKind::DiagTime:
            return size_t(timesteps) * d_in * 2;
        case ArchKind::Conv:
            return conv_param_count(*this);
    }
    return 0;
}

void ArchDescriptor::validate() const {
    require(in_height > 0 && in_width > 0 && in_channels > 0, ErrorKind::Config,
            "model input dims must be positive");
    require(out_channels > 0, ErrorKind::Config, "model output channels must be positive");
    if (input_skip) {
        require(out_channels == in_channels, ErrorKind::Config,
                "input skip needs matching in/out channels");
    }
    if (kind == ArchKind::Conv) {
        require(levels >= 1 && levels <= 4, ErrorKind::Config, "conv levels must be in [1,4]");
        int div = 1 << (levels - 1);
        require(in_height % div == 0 && in_width % div == 0, ErrorKind::Config,
                "conv input dims must be divisible by 2^(levels-1)");
        require(base_channels >= 1, ErrorKind::Config, "conv base channels must be positive");
    }
    if (kind == ArchKind::DiagTime) {
        require(timesteps >= 1, ErrorKind::Config, "diag-time model needs a timestep count");
        require(out_channels == in_channels, ErrorKind::Config,
                "diag-time model is shape-preserving");
        require(!time_channel, ErrorKind::Config,
                "diag-time model conditions on t by table lookup, not an input channel");
    }
}

std::string ArchDescriptor::kind_name() const {
    switch (kind) {
        case ArchKind::Affine: return "affine";
        case ArchKind::Conv: return "conv";
        case ArchKind::DiagTime: return "diag_time";
    }
    return "?";
}

ParamModel ParamModel::create(const ArchDescriptor& arch, InitMode init, SeededRng init_rng) {
    arch.validate();
    ParamModel m;
    m.arch_ = arch;
    m.params_.assign(arch.param_count(), 0.0);
    int d_in = arch.in_height * arch.in_width * arch.in_channels;
    if (init == InitMode::Zero) return m;
    switch (arch.kind) {
        case ArchKind::Affine: {
            int din = d_in + (arch.time_channel ? 1 : 0);
            int dout = arch.in_height * arch.in_width * arch.out_channels;
            if (init == InitMode::Identity) {
                require(dout == d_in, ErrorKind::Config, "identity affine needs square map");
                for (int j = 0; j < dout; ++j) m.params_[size_t(j) * din + j] = 1.0;
            } else {
                double std = 1.0 / std::sqrt(double(din));
                for (int j = 0; j < dout; ++j)
                    for (int i = 0; i < din; ++i)
                        m.params_[size_t(j) * din + i] = std * init_rng.next_normal();
            }
            break;
        }
        case ArchKind::DiagTime: {
            if (init == InitMode::Identity) {
                for (int i = 0; i < arch.timesteps * d_in; ++i) m.params_[size_t(i)] = 1.0;
            } else {
                for (int i = 0; i < arch.timesteps * d_in; ++i)
                    m.params_[size_t(i)] = 0.1 * init_rng.next_normal();
            }
            break;
        }
        case ArchKind::Conv: {
            auto layers = conv_layers(arch);
            size_t off = 0;
            for (size_t li = 0; li < layers.size(); ++li) {
                size_t nk = size_t(layers[li].out_ch) * layers[li].in_ch * 9;
                bool is_last = (li + 1 == layers.size());
                // Identity init keeps the output conv at zero so the net starts
                // as squash(input) through the input skip.
                if (!is_last || init == InitMode::Random) {
                    double std = 1.0 / std::sqrt(double(layers[li].in_ch) * 9.0);
                    if (is_last) std *= 0.01;
                    for (size_t i = 0; i < nk; ++i)
                        m.params_[off + i] = std * init_rng.next_normal();
                }
                off += nk + size_t(layers[li].out_ch);
            }
            break;
        }
    }
    return m;
}

ParamModel::ParamModel(const ParamModel& other)
    : arch_(other.arch_), params_(other.params_), evals_(other.eval_count()) {}

ParamModel& ParamModel::operator=(const ParamModel& other) {
    arch_ = other.arch_;
    params_ = other.params_;
    evals_.store(other.eval_count(), std::memory_order_relaxed);
    return *this;
}

ParamModel::ParamModel(ParamModel&& other) noexcept
    : arch_(std::move(other.arch_)), params_(std::move(other.params_)),
      evals_(other.eval_count()) {}

ParamModel& ParamModel::operator=(ParamModel&& other) noexcept {
    arch_ = std::move(other.arch_);
    params_ = std::move(other.params_);
    evals_.store(other.eval_count(), std::memory_order_relaxed);
    return *this;
}

ImageGrid ParamModel::forward(const ImageGrid& input, int t, const ScheduleTable* sched) const {
    Tape tape;
    return forward_tape(input, &tape, t, sched);
}

ImageGrid ParamModel::forward_tape(const ImageGrid& input, Tape* tape, int t,
                                   const ScheduleTable* sched) const {
    require(input.height == arch_.in_height && input.width == arch_.in_width &&
                input.channels == arch_.in_channels,
            ErrorKind::Logic, "model forward: input dims do not match architecture");
    evals_.fetch_add(1, std::memory_order_relaxed);
    tape->input_raw = input;
    tape->t = t;

    ImageGrid x = input;
    if (arch_.time_channel) {
        require(sched != nullptr && t >= 1 && t <= sched->timesteps(), ErrorKind::Logic,
                "time-conditioned model needs a valid timestep");
        ImageGrid aug(input.height, input.width, input.channels + 1, RangeTag::Unbounded);
        double tau = double(t) / double(sched->timesteps());
        for (int r = 0; r < input.height; ++r)
            for (int c = 0; c < input.width; ++c) {
                for (int ch = 0; ch < input.channels; ++ch) aug.at(r, c, ch) = input.at(r, c, ch);
                aug.at(r, c, input.channels) = tau;
            }
        x = std::move(aug);
    }
    tape->input_aug = x;

    switch (arch_.kind) {
        case ArchKind::Affine: {
            int din = int(x.size());
            int dout = arch_.in_height * arch_.in_width * arch_.out_channels;
            ImageGrid out(arch_.in_height, arch_.in_width, arch_.out_channels,
                          RangeTag::Unbounded);
            const double* w = params_.data();
            const double* b = params_.data() + size_t(dout) * din;
            for (int j = 0; j < dout; ++j) {
                double acc = b[j];
                const double* row = w + size_t(j) * din;
                for (int i = 0; i < din; ++i) acc += row[i] * x.values[size_t(i)];
                out.values[size_t(j)] = acc;
            }
            tape->pre_squash = out;
            if (arch_.input_skip) {
                for (size_t i = 0; i < out.values.size(); ++i)
                    tape->pre_squash.values[i] += input.values[i];
            }
            tape->output = tape->pre_squash;
            if (arch_.squash_output) {
                for (double& v : tape->output.values) v = std::tanh(v);
            }
            check_layer_finite(tape->output, "affine");
            return tape->output;
        }
        case ArchKind::DiagTime: {
            require(t >= 1 && t <= arch_.timesteps, ErrorKind::Logic,
                    "diag-time model: timestep out of range");
            int d = int(x.size());
            const double* gains = params_.data() + size_t(t - 1) * d;
            const double* biases = params_.data() + size_t(arch_.timesteps) * d + size_t(t - 1) * d;
            ImageGrid out = x;
            for (int i = 0; i < d; ++i)
                out.values[size_t(i)] = gains[i] * x.values[size_t(i)] + biases[i];
            tape->pre_squash = out;
            tape->output = out;
            check_layer_finite(tape->output, "diag_time");
            return tape->output;
        }
        case ArchKind::Conv:
            break;
    }

    // Conv encoder-decoder.
    auto layers = conv_layers(arch_);
    int L = arch_.levels;
    tape->enc_inputs.clear();
    tape->enc_pre.clear();
    tape->enc_act.clear();
    tape->dec_inputs.clear();
    tape->dec_pre.clear();
    tape->dec_sum.clear();

    size_t off = 0;
    ImageGrid h = x;
    for (int l = 0; l < L; ++l) {
        const ConvSpec& spec = layers[size_t(l)];
        tape->enc_inputs.push_back(h);
        ImageGrid pre;
        conv3x3_forward(h, params_.data() + off, params_.data() + off + size_t(spec.out_ch) * spec.in_ch * 9,
                        spec.out_ch, &pre);
        off += size_t(spec.out_ch) * spec.in_ch * 9 + size_t(spec.out_ch);
        check_layer_finite(pre, ("enc" + std::to_string(l)).c_str());
        tape->enc_pre.push_back(pre);
        ImageGrid act = pre;
        for (double& v : act.values) v = silu(v);
        tape->enc_act.push_back(act);
        h = act;
        if (l < L - 1) h = pool2(h);
    }
    for (int l = L - 2; l >= 0; --l) {
        size_t li = size_t(L + (L - 2 - l));
        const ConvSpec& spec = layers[li];
        ImageGrid up = up2(h);
        tape->dec_inputs.push_back(up);
        ImageGrid pre;
        conv3x3_forward(up, params_.data() + off, params_.data() + off + size_t(spec.out_ch) * spec.in_ch * 9,
                        spec.out_ch, &pre);
        off += size_t(spec.out_ch) * spec.in_ch * 9 + size_t(spec.out_ch);
        check_layer_finite(pre, ("dec" + std::to_string(l)).c_str());
        tape->dec_pre.push_back(pre);
        ImageGrid sum = pre;
        for (double& v : sum.values) v = silu(v);
        const ImageGrid& skip = tape->enc_act[size_t(l)];
        for (size_t i = 0; i < sum.values.size(); ++i) sum.values[i] += skip.values[i];
        tape->dec_sum.push_back(sum);
        h = sum;
    }
    const ConvSpec& out_spec = layers.back();
    tape->out_conv_input = h;
    ImageGrid out_pre;
    conv3x3_forward(h, params_.data() + off,
                    params_.data() + off + size_t(out_spec.out_ch) * out_spec.in_ch * 9,
                    out_spec.out_ch, &out_pre);
    check_layer_finite(out_pre, "out_conv");
    if (arch_.input_skip) {
        for (size_t i = 0; i < out_pre.values.size(); ++i) out_pre.values[i] += input.values[i];
    }
    tape->pre_squash = out_pre;
    tape->output = out_pre;
    if (arch_.squash_output) {
        for (double& v : tape->output.values) v = std::tanh(v);
    }
    return tape->output;
}

void ParamModel::backward(const Tape& tape, const ImageGrid& output_cotangent,
                          std::span<double> param_grad, ImageGrid* input_grad) const {
    require(param_grad.size() == params_.size(), ErrorKind::Logic,
            "backward: gradient buffer size mismatch");
    require_same_shape(tape.output, output_cotangent, "backward");

    ImageGrid g = output_cotangent;
    if (arch_.squash_output) {
        for (size_t i = 0; i < g.values.size(); ++i) {
            double y = tape.output.values[i];
            g.values[i] *= (1.0 - y * y);
        }
    }

    switch (arch_.kind) {
        case ArchKind::Affine: {
            const ImageGrid& x = tape.input_aug;
            int din = int(x.size());
            int dout = int(g.size());
            double* gw = param_grad.data();
            double* gb = param_grad.data() + size_t(dout) * din;
            for (int j = 0; j < dout; ++j) {
                double gj = g.values[size_t(j)];
                gb[j] += gj;
                double* row = gw + size_t(j) * din;
                for (int i = 0; i < din; ++i) row[i] += gj * x.values[size_t(i)];
            }
            if (input_grad) {
                ImageGrid gin = ImageGrid::zeros(arch_.in_height, arch_.in_width,
                                                 arch_.in_channels, RangeTag::Unbounded);
                const double* w = params_.data();
                int d_raw = int(gin.size());
                for (int j = 0; j < dout; ++j) {
                    double gj = g.values[size_t(j)];
                    if (gj == 0.0) continue;
                    const double* row = w + size_t(j) * din;
                    for (int i = 0; i < d_raw; ++i) gin.values[size_t(i)] += row[i] * gj;
                }
                if (arch_.input_skip) {
                    for (size_t i = 0; i < gin.values.size(); ++i)
                        gin.values[i] += g.values[i];
                }
                *input_grad = std::move(gin);
            }
            return;
        }
        case ArchKind::DiagTime: {
            const ImageGrid& x = tape.input_aug;
            int d = int(x.size());
            int t = tape.t;
            double* ggain = param_grad.data() + size_t(t - 1) * d;
            double* gbias = param_grad.data() + size_t(arch_.timesteps) * d + size_t(t - 1) * d;
            const double* gains = params_.data() + size_t(t - 1) * d;
            if (input_grad) {
                *input_grad =
                    ImageGrid::zeros(arch_.in_height, arch_.in_width, arch_.in_channels,
                                     RangeTag::Unbounded);
            }
            for (int i = 0; i < d; ++i) {
                double gi = g.values[size_t(i)];
                ggain[i] += gi * x.values[size_t(i)];
                gbias[i] += gi;
                if (input_grad) input_grad->values[size_t(i)] = gi * gains[i];
            }
            return;
        }
        case ArchKind::Conv:
            break;
    }

    auto layers = conv_layers(arch_);
    int L = arch_.levels;
    // Per-layer parameter offsets, in forward order.
    std::vector<size_t> offsets(layers.size());
    size_t off = 0;
    for (size_t i = 0; i < layers.size(); ++i) {
        offsets[i] = off;
        off += size_t(layers[i].out_ch) * layers[i].in_ch * 9 + size_t(layers[i].out_ch);
    }

    ImageGrid g_input_raw;
    bool want_input = input_grad != nullptr;
    if (want_input) {
        g_input_raw = ImageGrid::zeros(arch_.in_height, arch_.in_width, arch_.in_channels,
                                       RangeTag::Unbounded);
    }
    if (arch_.input_skip && want_input) {
        for (size_t i = 0; i < g.values.size(); ++i) g_input_raw.values[i] += g.values[i];
    }

    // Output conv.
    const ConvSpec& out_spec = layers.back();
    size_t oout = offsets.back();
    ImageGrid g_h;
    conv3x3_backward(tape.out_conv_input, params_.data() + oout, out_spec.out_ch, g, &g_h,
                     param_grad.data() + oout,
                     param_grad.data() + oout + size_t(out_spec.out_ch) * out_spec.in_ch * 9);

    // Decoder layers in reverse of forward (forward order: l = L-2 .. 0).
    // Cotangents flowing into each encoder activation accumulate both the
    // skip-add path and the pooled path.
    std::vector<ImageGrid> g_enc_act(size_t(L), ImageGrid{});
    for (int l = 0; l <= L - 2; ++l) {
        size_t di = size_t(L - 2 - l);  // position in tape->dec_* vectors
        // g_h is the cotangent of dec_sum[di]
        if (g_enc_act[size_t(l)].size() == 0) {
            g_enc_act[size_t(l)] = g_h;
        } else {
            for (size_t i = 0; i < g_h.values.size(); ++i)
                g_enc_act[size_t(l)].values[i] += g_h.values[i];
        }
        ImageGrid g_pre = g_h;
        const ImageGrid& pre = tape.dec_pre[di];
        for (size_t i = 0; i < g_pre.values.size(); ++i)
            g_pre.values[i] *= silu_grad(pre.values[i]);
        size_t li = size_t(L + di);
        size_t o = offsets[li];
        ImageGrid g_up;
        conv3x3_backward(tape.dec_inputs[di], params_.data() + o, layers[li].out_ch, g_pre, &g_up,
                         param_grad.data() + o,
                         param_grad.data() + o + size_t(layers[li].out_ch) * layers[li].in_ch * 9);
        g_h = up2_backward(g_up);
    }

    // g_h is now the cotangent of the bottom encoder activation (possibly
    // through no decoder when L == 1, in which case it came from the output conv).
    if (g_enc_act[size_t(L - 1)].size() == 0) {
        g_enc_act[size_t(L - 1)] = g_h;
    } else {
        for (size_t i = 0; i < g_h.values.size(); ++i)
            g_enc_act[size_t(L - 1)].values[i] += g_h.values[i];
    }

    for (int l = L - 1; l >= 0; --l) {
        ImageGrid g_act = std::move(g_enc_act[size_t(l)]);
        ImageGrid g_pre = g_act;
        const ImageGrid& pre = tape.enc_pre[size_t(l)];
        for (size_t i = 0; i < g_pre.values.size(); ++i)
            g_pre.values[i] *= silu_grad(pre.values[i]);
        size_t o = offsets[size_t(l)];
        ImageGrid g_in;
        conv3x3_backward(tape.enc_inputs[size_t(l)], params_.data() + o, layers[size_t(l)].out_ch,
                         g_pre, (l > 0 || want_input) ? &g_in : nullptr, param_grad.data() + o,
                         param_grad.data() + o + size_t(layers[size_t(l)].out_ch) *
                                                   layers[size_t(l)].in_ch * 9);
        if (l > 0) {
            // The conv input at level l is pool(enc_act[l-1]).
            ImageGrid g_pooled = pool2_backward(g_in);
            if (g_enc_act[size_t(l - 1)].size() == 0) {
                g_enc_act[size_t(l - 1)] = std::move(g_pooled);
            } else {
                for (size_t i = 0; i < g_pooled.values.size(); ++i)
                    g_enc_act[size_t(l - 1)].values[i] += g_pooled.values[i];
            }
        } else if (want_input) {
            // Drop the broadcast time channel if present.
            for (int r = 0; r < g_input_raw.height; ++r)
                for (int c = 0; c < g_input_raw.width; ++c)
                    for (int ch = 0; ch < g_input_raw.channels; ++ch)
                        g_input_raw.at(r, c, ch) += g_in.at(r, c, ch);
        }
    }
    if (want_input) *input_grad = std::move(g_input_raw);
}

ImageGrid generator_forward(const ParamModel& gen, const ImageGrid& y_a) {
    ImageGrid out = gen.forward(y_a);
    out.range_tag = RangeTag::ModelSpace;
    return out;
}

ImageGrid student_score(const ParamModel& student, const ImageGrid& x_t, int t,
                        const ScheduleTable& sched) {
    double ab = sched.alpha_bar(t);
    ImageGrid eps = student.forward(x_t, t, &sched);
    double inv = -1.0 / std::sqrt(1.0 - ab);
    for (double& v : eps.values) v *= inv;
    eps.check_finite("student_score");
    return eps;
}

double param_grad(const ParamModel& model, const ImageGrid& input, int t,
                  const ScheduleTable* sched, const LossWithCotangent& loss,
                  std::vector<double>* grad_out) {
    ParamModel::Tape tape;
    ImageGrid out = model.forward_tape(input, &tape, t, sched);
    ImageGrid cot;
    double value = loss(out, &cot);
    grad_out->assign(model.params().size(), 0.0);
    model.backward(tape, cot, *grad_out);
    for (double v : *grad_out) {
        if (!std::isfinite(v)) fail_numeric("param_grad: non-finite gradient");
    }
    return value;
}

}  // namespace udavi
