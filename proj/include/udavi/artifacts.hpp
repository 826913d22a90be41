#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "udavi/grid.hpp"

namespace udavi {

// 8-bit portable pixmap export: P6 for 3-channel, P5 for 1-channel.
// ModelSpace values map by (v+1)/2*255, MemorySpace by v*255, rounded half-up.
void export_image(const ImageGrid& grid, const std::string& path);

// Parses back an exported P5/P6 file (test support for the quantization
// round-trip bound).
ImageGrid import_image(const std::string& path, RangeTag tag);

// CSV with a `# config_hash=...` header line; doubles are written with 17
// significant digits so identical values serialize identically.
class CsvWriter {
public:
    CsvWriter(const std::string& path, uint64_t config_hash,
              const std::vector<std::string>& columns);
    void row(const std::vector<double>& values);
    void row_mixed(const std::vector<std::string>& values);
    ~CsvWriter();

private:
    std::string path_;
    std::string buffer_;
    size_t columns_ = 0;
};

std::string format_double(double v);

// Reads the config hash recorded in a CSV header; errors if absent.
uint64_t read_csv_config_hash(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

void write_doubles(const std::string& path, const std::vector<double>& values);
std::vector<double> read_doubles(const std::string& path);

void ensure_directory(const std::string& path);

// FNV-1a over bytes; used for config hashing and bit-identity checks.
uint64_t fnv1a(const void* data, size_t len, uint64_t basis = 1469598103934665603ULL);
uint64_t hash_doubles(const std::vector<double>& values);

}  // namespace udavi
