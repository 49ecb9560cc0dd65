#include "isaclab/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace isaclab {

std::string format_double(double v) {
  // round-trip precision, then trim: 17 digits only when 16 do not survive
  char buf[64];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    double back = 0.0;
    std::sscanf(buf, "%lf", &back);
    if (back == v) break;
  }
  return buf;
}

std::string format_int(long long v) { return std::to_string(v); }

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

CsvWriter::CsvWriter(std::string path, std::vector<std::string> columns)
    : path_(std::move(path)), cols_(columns.size()) {
  if (columns.empty()) throw Error("csv: no columns");
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) buf_ += ',';
    buf_ += columns[i];
  }
  buf_ += '\n';
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (finished_) throw Error("csv: row after finish");
  if (cells.size() != cols_) throw Error("csv: wrong cell count for " + path_);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) buf_ += ',';
    buf_ += cells[i];
  }
  buf_ += '\n';
  ++rows_;
}

int CsvWriter::finish() {
  if (!finished_) {
    write_text_file(path_, buf_);
    finished_ = true;
  }
  return rows_;
}

void write_manifest(const std::string& path, const Manifest& m) {
  nlohmann::ordered_json j;
  j["pipeline"] = m.pipeline;
  j["config_hash"] = m.config_hash;
  j["seed"] = m.seed;
  j["trials"] = m.trials;
  j["threads"] = m.threads;
  j["version"] = m.version;
  j["infeasible"] = m.infeasible;
  j["messages"] = m.messages;
  auto outs = nlohmann::ordered_json::array();
  for (const auto& o : m.outputs) outs.push_back({{"file", o.file}, {"rows", o.rows}});
  j["outputs"] = outs;
  write_text_file(path, j.dump(2) + "\n");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("short write to " + path);
}

void write_signal_binary(const std::string& path, const std::vector<cvec>& symbols,
                         const OfdmConfig& cfg) {
  for (const auto& sym : symbols)
    if (static_cast<int>(sym.size()) != cfg.n_subcarriers)
      throw Error("signal export: symbol length mismatch");
  std::string bytes;
  bytes.reserve(symbols.size() * static_cast<std::size_t>(cfg.n_subcarriers) * 8);
  static_assert(sizeof(float) == 4);
  for (const auto& sym : symbols) {
    for (const cdouble& s : sym) {
      const float re = static_cast<float>(s.real());
      const float im = static_cast<float>(s.imag());
      char tmp[8];
      std::memcpy(tmp, &re, 4);
      std::memcpy(tmp + 4, &im, 4);
      bytes.append(tmp, 8);
    }
  }
  write_text_file(path, bytes);
  nlohmann::ordered_json side;
  side["n"] = cfg.n_subcarriers;
  side["m"] = static_cast<int>(symbols.size());
  side["t_s"] = cfg.sample_interval_s;
  side["format"] = "complex64-le-interleaved";
  write_text_file(path + ".json", side.dump(2) + "\n");
}

}  // namespace isaclab
