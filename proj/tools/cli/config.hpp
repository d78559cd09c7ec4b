#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "jumplab/field_io.hpp"
#include "jumplab/lattice.hpp"

namespace jumplab::cli {

using nlohmann::json;

// Output file could not be written.
class IoError : public Error {
 public:
  using Error::Error;
};

// Parses a JSON document; syntax errors become SpecError("line L, column C").
json parse_config_text(const std::string& text, const std::string& origin);
json load_config_file(const std::string& path);

// 64-bit FNV-1a over the compact dump of the effective config.
std::uint64_t fnv1a(const std::string& bytes);
std::string config_hash(const json& config);
std::string hex64(std::uint64_t v);

struct Caps {
  std::size_t max_points = 50'000'000;
  std::size_t max_paths = 100'000'000;
  std::size_t max_nodes = 1'000'000;
  std::size_t memory_bytes = std::size_t{8} << 30;
};
Caps caps_from(const json& config);
void check_cap(std::size_t requested, std::size_t cap, const std::string& what);

// Typed accessors; every failure names the JSON path of the offending value.
class Node {
 public:
  Node(const json& j, std::string path) : j_(&j), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  const json& raw() const { return *j_; }
  bool has(const std::string& key) const;
  Node at(const std::string& key) const;  // required

  double number(const std::string& key, std::optional<double> def = std::nullopt) const;
  double positive(const std::string& key, std::optional<double> def = std::nullopt) const;
  std::int64_t integer(const std::string& key, std::optional<std::int64_t> def = std::nullopt) const;
  std::size_t count(const std::string& key, std::optional<std::size_t> def = std::nullopt) const;
  bool boolean(const std::string& key, bool def) const;
  std::string string(const std::string& key, std::optional<std::string> def = std::nullopt) const;
  std::vector<double> numbers(const std::string& key, std::optional<std::vector<double>> def = std::nullopt) const;
  std::optional<double> maybe_number(const std::string& key) const;
  // Position vector of length d.
  Vec point(const std::string& key, int d, std::optional<Vec> def = std::nullopt) const;
  std::vector<Vec> points(const std::string& key, int d) const;

  // Rejects keys outside `allowed` so typos do not pass silently.
  void only(std::initializer_list<const char*> allowed) const;

 private:
  const json* j_;
  std::string path_;
};

}  // namespace jumplab::cli
