#include "config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace jumplab::cli {

json parse_config_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t byte = e.byte == 0 ? 0 : e.byte - 1;
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string what = e.what();
    if (const auto p = what.find("syntax error"); p != std::string::npos) what = what.substr(p);
    throw SpecError(origin + ":" + std::to_string(line) + ":" + std::to_string(col), what);
  }
}

json load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SpecError(path, "cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return s;
}

std::string config_hash(const json& config) { return hex64(fnv1a(config.dump())); }

Caps caps_from(const json& config) {
  Caps c;
  if (!config.contains("caps")) return c;
  const Node n(config["caps"], "/caps");
  n.only({"max_points", "max_paths", "max_nodes", "memory_bytes"});
  c.max_points = n.count("max_points", c.max_points);
  c.max_paths = n.count("max_paths", c.max_paths);
  c.max_nodes = n.count("max_nodes", c.max_nodes);
  c.memory_bytes = n.count("memory_bytes", c.memory_bytes);
  return c;
}

void check_cap(std::size_t requested, std::size_t cap, const std::string& what) {
  if (requested > cap)
    throw ResourceLimit(what + ": " + std::to_string(requested) + " exceeds cap " + std::to_string(cap));
}

bool Node::has(const std::string& key) const {
  return j_->is_object() && j_->contains(key) && !(*j_)[key].is_null();
}

Node Node::at(const std::string& key) const {
  if (!j_->is_object()) throw SpecError(path_, "expected an object");
  if (!has(key)) throw SpecError(path_ + "/" + key, "required field missing");
  return Node((*j_)[key], path_ + "/" + key);
}

double Node::number(const std::string& key, std::optional<double> def) const {
  if (!has(key)) {
    if (def) return *def;
    throw SpecError(path_ + "/" + key, "required field missing");
  }
  const auto& v = (*j_)[key];
  if (!v.is_number()) throw SpecError(path_ + "/" + key, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw SpecError(path_ + "/" + key, "expected a finite number");
  return x;
}

double Node::positive(const std::string& key, std::optional<double> def) const {
  const double x = number(key, def);
  if (!(x > 0.0)) throw SpecError(path_ + "/" + key, "must be positive");
  return x;
}

std::optional<double> Node::maybe_number(const std::string& key) const {
  if (!has(key)) return std::nullopt;
  return number(key);
}

std::int64_t Node::integer(const std::string& key, std::optional<std::int64_t> def) const {
  if (!has(key)) {
    if (def) return *def;
    throw SpecError(path_ + "/" + key, "required field missing");
  }
  const auto& v = (*j_)[key];
  if (!v.is_number_integer()) throw SpecError(path_ + "/" + key, "expected an integer");
  return v.get<std::int64_t>();
}

std::size_t Node::count(const std::string& key, std::optional<std::size_t> def) const {
  if (!has(key)) {
    if (def) return *def;
    throw SpecError(path_ + "/" + key, "required field missing");
  }
  const auto& v = (*j_)[key];
  if (v.is_number_float()) {
    // Allow 1e5-style literals when they are exact integers.
    const double x = v.get<double>();
    if (x >= 0.0 && x == std::floor(x) && x < 1.8e19) return static_cast<std::size_t>(x);
  }
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
    throw SpecError(path_ + "/" + key, "expected a nonnegative integer");
  return v.get<std::size_t>();
}

bool Node::boolean(const std::string& key, bool def) const {
  if (!has(key)) return def;
  const auto& v = (*j_)[key];
  if (!v.is_boolean()) throw SpecError(path_ + "/" + key, "expected true or false");
  return v.get<bool>();
}

std::string Node::string(const std::string& key, std::optional<std::string> def) const {
  if (!has(key)) {
    if (def) return *def;
    throw SpecError(path_ + "/" + key, "required field missing");
  }
  const auto& v = (*j_)[key];
  if (!v.is_string()) throw SpecError(path_ + "/" + key, "expected a string");
  return v.get<std::string>();
}

std::vector<double> Node::numbers(const std::string& key, std::optional<std::vector<double>> def) const {
  if (!has(key)) {
    if (def) return *def;
    throw SpecError(path_ + "/" + key, "required field missing");
  }
  const auto& v = (*j_)[key];
  if (!v.is_array()) throw SpecError(path_ + "/" + key, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw SpecError(path_ + "/" + key + "/" + std::to_string(i), "expected a number");
    out.push_back(v[i].get<double>());
    if (!std::isfinite(out.back()))
      throw SpecError(path_ + "/" + key + "/" + std::to_string(i), "expected a finite number");
  }
  return out;
}

Vec Node::point(const std::string& key, int d, std::optional<Vec> def) const {
  if (!has(key) && def) return *def;
  const auto xs = numbers(key);
  if (static_cast<int>(xs.size()) != d)
    throw SpecError(path_ + "/" + key, "expected " + std::to_string(d) + " coordinates");
  Vec v{};
  for (int i = 0; i < d; ++i) v[static_cast<std::size_t>(i)] = xs[static_cast<std::size_t>(i)];
  return v;
}

std::vector<Vec> Node::points(const std::string& key, int d) const {
  const auto& v = at(key).raw();
  const std::string p = path_ + "/" + key;
  if (!v.is_array()) throw SpecError(p, "expected an array of points");
  std::vector<Vec> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    json wrapper = {{"p", v[i]}};
    out.push_back(Node(wrapper, p + "/" + std::to_string(i)).point("p", d));
  }
  return out;
}

void Node::only(std::initializer_list<const char*> allowed) const {
  if (!j_->is_object()) throw SpecError(path_, "expected an object");
  for (const auto& [key, _] : j_->items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw SpecError(path_ + "/" + key, "unknown field");
  }
}

}  // namespace jumplab::cli
