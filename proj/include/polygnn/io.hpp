#pragma once

#include "polygnn/graph.hpp"
#include "polygnn/homogenization.hpp"
#include "polygnn/microstructure.hpp"
#include "polygnn/network.hpp"

#include <concepts>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace polygnn {

namespace fs = std::filesystem;

/// Shortest decimal form that round-trips a double (17 significant digits).
std::string format_double(double x);

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

std::string read_text_file(const fs::path& path);
void write_text_file(const fs::path& path, const std::string& text);

/// "n N" followed by one "e i j" line per edge.
void write_graph_file(const fs::path& path, const Graph& g);
Graph read_graph_file(const fs::path& path);

void write_matrix_csv(const fs::path& path, const Eigen::MatrixXd& m);

/// Binary voxel file: "PXTL", format version, grid, grain count, seed, uint16
/// labels, then three float64 Euler angles per grain (little-endian host).
void save_polycrystal(const fs::path& path, const Polycrystal& p);
Polycrystal load_polycrystal(const fs::path& path);

inline constexpr const char* kDatasetHeader = "rve_id,C11,C22,C33,C12,C23,C13,psi,S11,S22,S33,S12,S23,S13";

void write_dataset_csv(const fs::path& path, std::span<const DeformationSample> samples);
std::vector<DeformationSample> read_dataset_csv(const fs::path& path);

/// Text checkpoint with an FNV-1a checksum line. Loading verifies the checksum
/// and, if expected is non-null, that the stored architecture equals it.
void save_checkpoint(const ModelParams& params, const fs::path& path);
ModelParams load_checkpoint(const fs::path& path, const Architecture* expected = nullptr);
std::string serialize_checkpoint(const ModelParams& params);
ModelParams parse_checkpoint(const std::string& text, const Architecture* expected = nullptr);

/// Plain "key value" lines, sorted by key.
void write_metadata(const fs::path& path, const std::map<std::string, std::string>& entries);
std::map<std::string, std::string> read_metadata(const fs::path& path);

/// Minimal CSV writer with 17-digit numbers.
class CsvWriter {
public:
    CsvWriter(const fs::path& path, const std::vector<std::string>& header);
    CsvWriter& operator<<(double x);
    CsvWriter& operator<<(const std::string& s);
    CsvWriter& operator<<(long long x);
    template <std::integral T>
    CsvWriter& operator<<(T x) {
        return *this << static_cast<long long>(x);
    }
    void end_row();
    void close();
    ~CsvWriter();

private:
    fs::path path_;
    std::string buffer_;
    bool row_started_ = false;
    bool closed_ = false;
};

}  // namespace polygnn
