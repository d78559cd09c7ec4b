#include "report.hpp"

#include <bit>
#include <charconv>
#include <cmath>

#include "config.hpp"

namespace jumplab::cli {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace {

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_bytes(const std::filesystem::path& p, const std::string& body) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + p.string());
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  out.flush();
  if (!out) throw IoError("write failed: " + p.string());
}

}  // namespace

CsvTable::Row& CsvTable::Row::num(double x) {
  cells_.push_back(format_number(x));
  return *this;
}

CsvTable::Row& CsvTable::Row::integer(std::int64_t x) {
  cells_.push_back(std::to_string(x));
  return *this;
}

CsvTable::Row& CsvTable::Row::text(const std::string& s) {
  cells_.push_back(csv_cell(s));
  return *this;
}

CsvTable::Row& CsvTable::row() { return rows_.emplace_back(); }

std::string CsvTable::render(const std::string& hash) const {
  std::string out = "# config_hash=" + hash + "\n";
  for (std::size_t i = 0; i < header_.size(); ++i) out += (i ? "," : "") + header_[i];
  out += '\n';
  for (const auto& r : rows_) {
    for (std::size_t i = 0; i < r.cells_.size(); ++i) out += (i ? "," : "") + r.cells_[i];
    out += '\n';
  }
  return out;
}

ArtifactWriter::ArtifactWriter(std::filesystem::path dir, std::string hash)
    : dir_(std::move(dir)), hash_(std::move(hash)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec || !std::filesystem::is_directory(dir_))
    throw IoError("cannot create output directory " + dir_.string());
}

void ArtifactWriter::csv(const std::string& name, const CsvTable& table) {
  write_bytes(dir_ / name, table.render(hash_));
  written_.push_back(name);
}

void ArtifactWriter::json(const std::string& name, nlohmann::json doc) {
  if (doc.is_object()) doc["config_hash"] = hash_;
  write_bytes(dir_ / name, doc.dump(2) + "\n");
  written_.push_back(name);
}

void ArtifactWriter::text(const std::string& name, const std::string& body) {
  write_bytes(dir_ / name, body);
  written_.push_back(name);
}

EventLog::EventLog(const std::filesystem::path& file, std::uint64_t hash, int d, double rho)
    : out_(file, std::ios::binary | std::ios::trunc), file_(file), d_(d) {
  if (!out_) throw IoError("cannot write " + file.string());
  out_.write("JLEVLOG1", 8);
  put_u64(hash);
  put_u64(static_cast<std::uint64_t>(d));
  put_f64(rho);
}

void EventLog::put_u64(std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out_.write(b, 8);
}

void EventLog::put_f64(double v) { put_u64(std::bit_cast<std::uint64_t>(v)); }

void EventLog::put_point(const GridPoint& k) {
  for (int i = 0; i < d_; ++i) put_u64(static_cast<std::uint64_t>(k[i]));
}

void EventLog::start(const GridPoint& x0) {
  put_f64(-1.0);
  put_point(x0);
}

void EventLog::event(double t, const GridPoint& k) {
  put_f64(t);
  put_point(k);
}

void EventLog::close() {
  out_.flush();
  if (!out_) throw IoError("write failed: " + file_.string());
  out_.close();
}

}  // namespace jumplab::cli
