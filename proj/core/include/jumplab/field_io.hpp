#pragma once

#include <nlohmann/json.hpp>
#include <string>

#include "jumplab/conductivity.hpp"
#include "jumplab/errors.hpp"

namespace jumplab {

// Configuration error tied to a JSON location (a JSON-pointer-like path).
class SpecError : public ConfigError {
 public:
  SpecError(std::string path, const std::string& msg)
      : ConfigError(path + ": " + msg), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// Field specs:
//   {"family": "isotropic_stable" | "double_cone" | "axes_counterexample" | "table",
//    "d": int, "alpha": float, "rho": float, "params": {...}, "meta": {...}}
//   {"family": "kernel_cells", "n": int, "d": int, "alpha": float,
//    "kernel": {"type": "isotropic" | "cone" | "expr", ...}, "quadrature": {...}}
// Relative table paths resolve against base_dir.
ConductivityField field_from_json(const nlohmann::json& spec, const std::string& path = "/field",
                                  const std::string& base_dir = "");
KernelSpec kernel_from_json(const nlohmann::json& spec, int d, double alpha, const std::string& path);

nlohmann::json meta_to_json(const ConductivityMeta& meta);
ConductivityMeta meta_from_json(const nlohmann::json& j, const std::string& path);
nlohmann::json field_summary(const ConductivityField& C);

}  // namespace jumplab
