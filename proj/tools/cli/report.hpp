#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "jumplab/lattice.hpp"

namespace jumplab::cli {

// Shortest decimal that round-trips to the same double; "nan", "inf", "-inf"
// for non-finite values.
std::string format_number(double x);

// CSV with a fixed header. The first line is a "# config_hash=<hex>" comment;
// an empty table is that line plus the header.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  class Row {
   public:
    Row& num(double x);
    Row& integer(std::int64_t x);
    Row& text(const std::string& s);
    Row& flag(bool b) { return text(b ? "true" : "false"); }
    Row& empty() { return text(""); }

   private:
    friend class CsvTable;
    std::vector<std::string> cells_;
  };

  Row& row();
  std::size_t size() const { return rows_.size(); }
  std::string render(const std::string& hash) const;

 private:
  std::vector<std::string> header_;
  std::vector<Row> rows_;
};

// Collects artifacts of one run; all writes go below `dir`.
class ArtifactWriter {
 public:
  ArtifactWriter(std::filesystem::path dir, std::string hash);

  void csv(const std::string& name, const CsvTable& table);
  // Adds "config_hash" to object documents.
  void json(const std::string& name, nlohmann::json doc);
  void text(const std::string& name, const std::string& body);
  std::filesystem::path path(const std::string& name) const { return dir_ / name; }
  void record(const std::string& name) { written_.push_back(name); }

  const std::vector<std::string>& written() const { return written_; }
  const std::string& hash() const { return hash_; }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::string hash_;
  std::vector<std::string> written_;
};

// Binary event log, little-endian throughout:
//   header  "JLEVLOG1", u64 config hash, u32 d, u32 0, f64 rho
//   per path: start record (f64 -1, i64 x0[d]) then one (f64 t, i64 k[d])
//   record per jump. Coordinates are integer lattice coordinates.
class EventLog {
 public:
  EventLog(const std::filesystem::path& file, std::uint64_t hash, int d, double rho);
  void start(const GridPoint& x0);
  void event(double t, const GridPoint& k);
  void close();

 private:
  void put_u64(std::uint64_t v);
  void put_f64(double v);
  void put_point(const GridPoint& k);

  std::ofstream out_;
  std::filesystem::path file_;
  int d_;
};

}  // namespace jumplab::cli
