#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "isaclab/ofdm.hpp"
#include "isaclab/types.hpp"

namespace isaclab {

inline constexpr const char* kVersion = "1.0.0";

// Shortest exact decimal form; the same value always prints the same bytes,
// which is what makes reruns diffable.
std::string format_double(double v);
std::string format_int(long long v);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

// Buffered CSV emitter: header first, LF line endings, written to disk in
// one piece by finish().
class CsvWriter {
 public:
  CsvWriter(std::string path, std::vector<std::string> columns);
  void row(const std::vector<std::string>& cells);
  // Writes the file; returns the number of data rows.
  int finish();
  const std::string& path() const { return path_; }
  int rows() const { return rows_; }

 private:
  std::string path_;
  std::size_t cols_;
  std::string buf_;
  int rows_ = 0;
  bool finished_ = false;
};

struct ManifestOutput {
  std::string file;  // basename relative to the manifest
  int rows = 0;
};

struct Manifest {
  std::string pipeline;
  std::string config_hash;  // fnv1a64 over the scenario file bytes
  std::uint64_t seed = 0;
  int trials = 0;
  unsigned threads = 0;
  std::string version = kVersion;
  bool infeasible = false;
  std::vector<std::string> messages;
  std::vector<ManifestOutput> outputs;
};

void write_manifest(const std::string& path, const Manifest& m);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

// Interleaved little-endian complex64 (float re, float im per sample),
// symbols concatenated in time order, plus a <path>.json sidecar carrying
// the shape: {"n": N, "m": M, "t_s": sample interval}.
void write_signal_binary(const std::string& path, const std::vector<cvec>& symbols,
                         const OfdmConfig& cfg);

}  // namespace isaclab
