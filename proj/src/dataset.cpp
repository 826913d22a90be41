#include "udavi/dataset.hpp"

#include <algorithm>
#include <cmath>

namespace udavi {

void DatasetSpec::validate() const {
    require(count >= 1, ErrorKind::Config, "dataset.count must be >= 1");
    require(height > 0 && width > 0 && channels > 0, ErrorKind::Config,
            "dataset dims must be positive");
}

namespace {

ImageGrid texture_sample(int h, int w, int c, SeededRng& rng) {
    // Sinusoid gratings plus a randomly oriented step edge and fine-grained
    // detail noise, scaled to stay inside model space.
    ImageGrid img(h, w, c, RangeTag::ModelSpace);
    int waves = 2 + int(rng.next_int(0, 1));
    std::vector<double> freq(waves), angle(waves), phase(waves), amp(waves);
    for (int k = 0; k < waves; ++k) {
        freq[k] = 1.0 + 5.0 * rng.next_double();
        angle[k] = 2.0 * M_PI * rng.next_double();
        phase[k] = 2.0 * M_PI * rng.next_double();
        amp[k] = 0.25 + 0.25 * rng.next_double();
    }
    double edge_angle = 2.0 * M_PI * rng.next_double();
    double edge_offset = rng.next_double() - 0.5;
    double edge_amp = 0.3 + 0.2 * rng.next_double();
    double detail_amp = 0.05 + 0.05 * rng.next_double();
    std::vector<double> detail(size_t(h) * w);
    for (double& v : detail) v = rng.next_normal();

    double amp_total = edge_amp + detail_amp * 3.0;
    for (int k = 0; k < waves; ++k) amp_total += amp[k];
    double norm = 0.92 / amp_total;

    for (int r = 0; r < h; ++r) {
        for (int cc = 0; cc < w; ++cc) {
            double x = (double(cc) / w) - 0.5;
            double y = (double(r) / h) - 0.5;
            double v = 0.0;
            for (int k = 0; k < waves; ++k) {
                double proj = x * std::cos(angle[k]) + y * std::sin(angle[k]);
                v += amp[k] * std::sin(2.0 * M_PI * freq[k] * proj + phase[k]);
            }
            double eproj = x * std::cos(edge_angle) + y * std::sin(edge_angle) - edge_offset * 0.5;
            v += edge_amp * (eproj > 0.0 ? 1.0 : -1.0);
            v += detail_amp * detail[size_t(r) * w + cc];
            v *= norm;
            v = std::clamp(v, -1.0, 1.0);
            for (int ch = 0; ch < c; ++ch) img.at(r, cc, ch) = v;
        }
    }
    return img;
}

}  // namespace

SynthResult synth_dataset(const DatasetSpec& spec, const GaussianPrior* prior, SeededRng rng) {
    spec.validate();
    int dim = spec.height * spec.width * spec.channels;
    if (spec.kind != DatasetKind::ProceduralTextures) {
        require(prior != nullptr, ErrorKind::Config,
                "gaussian dataset kinds need a prior definition");
        require(prior->dim() == dim, ErrorKind::Config,
                "prior dimension does not match dataset dims");
    }
    SynthResult result;
    result.records.reserve(size_t(spec.count));
    int64_t clamped = 0;
    for (int i = 0; i < spec.count; ++i) {
        SeededRng rec_rng = rng.derive(RngPurpose::DataSynth, uint64_t(i), 0);
        SampleRecord rec;
        rec.sample_id = i;
        if (spec.kind == DatasetKind::ProceduralTextures) {
            rec.x0 = texture_sample(spec.height, spec.width, spec.channels, rec_rng);
        } else {
            std::vector<double> v = prior->sample(rec_rng);
            ImageGrid img(spec.height, spec.width, spec.channels, RangeTag::ModelSpace);
            for (int k = 0; k < dim; ++k) {
                double orig = v[size_t(k)];
                double cl = std::clamp(orig, -1.0, 1.0);
                if (cl != orig) ++clamped;
                img.values[size_t(k)] = cl;
            }
            rec.x0 = std::move(img);
        }
        result.records.push_back(std::move(rec));
    }
    result.clamp_rate = double(clamped) / (double(spec.count) * double(dim));
    return result;
}

std::pair<std::vector<SampleRecord>, std::vector<SampleRecord>> train_val_split(
    std::vector<SampleRecord> records, double val_fraction, SeededRng rng) {
    require(val_fraction > 0.0 && val_fraction < 1.0, ErrorKind::Config,
            "val fraction must lie strictly between 0 and 1");
    size_t n = records.size();
    require(n >= 2, ErrorKind::Config, "split needs at least 2 records");
    // Seeded Fisher-Yates, then the tail becomes the validation side.
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    SeededRng split_rng = rng.derive(RngPurpose::Split, 0, 0);
    for (size_t i = n - 1; i > 0; --i) {
        size_t j = size_t(split_rng.next_int(0, int64_t(i)));
        std::swap(order[i], order[j]);
    }
    size_t n_val = size_t(std::llround(val_fraction * double(n)));
    require(n_val >= 1 && n_val < n, ErrorKind::Config,
            "split leaves an empty side; adjust val fraction or record count");
    std::vector<SampleRecord> train, val;
    train.reserve(n - n_val);
    val.reserve(n_val);
    for (size_t i = 0; i < n; ++i) {
        if (i < n - n_val) {
            train.push_back(std::move(records[order[i]]));
        } else {
            val.push_back(std::move(records[order[i]]));
        }
    }
    return {std::move(train), std::move(val)};
}

}  // namespace udavi
