#include "udavi/artifacts.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace udavi {

namespace {

uint8_t quantize(double v, RangeTag tag) {
    double unit;
    switch (tag) {
        case RangeTag::ModelSpace: unit = (v + 1.0) * 0.5; break;
        case RangeTag::MemorySpace: unit = v; break;
        default: fail_logic("export_image: grid must be model- or memory-space");
    }
    double scaled = std::floor(unit * 255.0 + 0.5);
    if (scaled < 0.0) scaled = 0.0;
    if (scaled > 255.0) scaled = 255.0;
    return uint8_t(scaled);
}

}  // namespace

void export_image(const ImageGrid& grid, const std::string& path) {
    require(grid.channels == 1 || grid.channels == 3, ErrorKind::Config,
            "image export supports 1 or 3 channels");
    std::ofstream out(path, std::ios::binary);
    if (!out) fail_io("cannot open " + path + " for writing");
    out << (grid.channels == 3 ? "P6" : "P5") << "\n"
        << grid.width << " " << grid.height << "\n255\n";
    std::vector<uint8_t> bytes;
    bytes.reserve(grid.size());
    for (int r = 0; r < grid.height; ++r)
        for (int c = 0; c < grid.width; ++c)
            for (int ch = 0; ch < grid.channels; ++ch)
                bytes.push_back(quantize(grid.at(r, c, ch), grid.range_tag));
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) fail_io("failed writing image " + path);
}

ImageGrid import_image(const std::string& path, RangeTag tag) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_io("cannot open " + path);
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    require(magic == "P5" || magic == "P6", ErrorKind::Io, "unsupported image format in " + path);
    require(maxval == 255, ErrorKind::Io, "expected 8-bit image in " + path);
    in.get();  // single whitespace after header
    int channels = magic == "P6" ? 3 : 1;
    ImageGrid g(h, w, channels, tag);
    std::vector<uint8_t> bytes(size_t(h) * w * channels);
    in.read(reinterpret_cast<char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!in) fail_io("truncated image " + path);
    size_t k = 0;
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            for (int ch = 0; ch < channels; ++ch) {
                double unit = double(bytes[k++]) / 255.0;
                g.at(r, c, ch) = tag == RangeTag::ModelSpace ? unit * 2.0 - 1.0 : unit;
            }
    return g;
}

std::string format_double(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(const std::string& path, uint64_t config_hash,
                     const std::vector<std::string>& columns)
    : path_(path), columns_(columns.size()) {
    buffer_ = "# config_hash=" + std::to_string(config_hash) + "\n";
    for (size_t i = 0; i < columns.size(); ++i) {
        buffer_ += columns[i];
        buffer_ += (i + 1 < columns.size()) ? ',' : '\n';
    }
}

void CsvWriter::row(const std::vector<double>& values) {
    require(values.size() == columns_, ErrorKind::Logic, "csv row width mismatch");
    for (size_t i = 0; i < values.size(); ++i) {
        buffer_ += format_double(values[i]);
        buffer_ += (i + 1 < values.size()) ? ',' : '\n';
    }
}

void CsvWriter::row_mixed(const std::vector<std::string>& values) {
    require(values.size() == columns_, ErrorKind::Logic, "csv row width mismatch");
    for (size_t i = 0; i < values.size(); ++i) {
        buffer_ += values[i];
        buffer_ += (i + 1 < values.size()) ? ',' : '\n';
    }
}

CsvWriter::~CsvWriter() {
    std::ofstream out(path_, std::ios::binary);
    if (out) out.write(buffer_.data(), std::streamsize(buffer_.size()));
}

uint64_t read_csv_config_hash(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail_io("cannot open " + path);
    std::string line;
    std::getline(in, line);
    const std::string prefix = "# config_hash=";
    require(line.rfind(prefix, 0) == 0, ErrorKind::Io, "missing config hash header in " + path);
    return std::stoull(line.substr(prefix.size()));
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail_io("cannot open " + path + " for writing");
    out.write(content.data(), std::streamsize(content.size()));
    if (!out) fail_io("failed writing " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_io("cannot open " + path);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return content;
}

void write_doubles(const std::string& path, const std::vector<double>& values) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail_io("cannot open " + path + " for writing");
    uint64_t n = values.size();
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    out.write(reinterpret_cast<const char*>(values.data()),
              std::streamsize(values.size() * sizeof(double)));
    if (!out) fail_io("failed writing " + path);
}

std::vector<double> read_doubles(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_io("cannot open " + path);
    uint64_t n = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof(n));
    std::vector<double> values(n);
    in.read(reinterpret_cast<char*>(values.data()), std::streamsize(n * sizeof(double)));
    if (!in) fail_io("truncated file " + path);
    return values;
}

void ensure_directory(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec) fail_io("cannot create directory " + path + ": " + ec.message());
}

uint64_t fnv1a(const void* data, size_t len, uint64_t basis) {
    const uint8_t* bytes = static_cast<const uint8_t*>(data);
    uint64_t h = basis;
    for (size_t i = 0; i < len; ++i) {
        h ^= bytes[i];
        h *= 1099511628211ULL;
    }
    return h;
}

uint64_t hash_doubles(const std::vector<double>& values) {
    return fnv1a(values.data(), values.size() * sizeof(double));
}

}  // namespace udavi
