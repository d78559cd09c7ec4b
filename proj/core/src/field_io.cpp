#include "jumplab/field_io.hpp"

#include <cmath>
#include <filesystem>

#include "jumplab/expr.hpp"

namespace jumplab {

using nlohmann::json;

namespace {

const json& require(const json& j, const char* key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw SpecError(path + "/" + key, "required field missing");
  return j.at(key);
}

double get_number(const json& j, const char* key, const std::string& path, std::optional<double> def) {
  if (!j.is_object() || !j.contains(key)) {
    if (def) return *def;
    throw SpecError(path + "/" + key, "required field missing");
  }
  const auto& v = j.at(key);
  if (!v.is_number()) throw SpecError(path + "/" + key, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw SpecError(path + "/" + key, "expected a finite number");
  return x;
}

int get_int(const json& j, const char* key, const std::string& path, std::optional<int> def) {
  if (!j.is_object() || !j.contains(key)) {
    if (def) return *def;
    throw SpecError(path + "/" + key, "required field missing");
  }
  const auto& v = j.at(key);
  if (!v.is_number_integer()) throw SpecError(path + "/" + key, "expected an integer");
  return v.get<int>();
}

void check_alpha(double alpha, const std::string& path) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw SpecError(path + "/alpha", "alpha must lie in (0, 2)");
}

void check_dim(int d, const std::string& path) {
  if (d < 1 || d > kMaxDim) throw SpecError(path + "/d", "dimension must be 1..3");
}

template <class F>
auto wrap(const std::string& path, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const SpecError&) {
    throw;
  } catch (const ConfigError& e) {
    throw SpecError(path, e.what());
  } catch (const InvalidArgument& e) {
    throw SpecError(path, e.what());
  }
}

}  // namespace

ConductivityMeta meta_from_json(const json& j, const std::string& path) {
  ConductivityMeta m;
  if (j.is_null()) return m;
  if (!j.is_object()) throw SpecError(path, "expected an object");
  auto opt = [&](const char* key, std::optional<double>& out) {
    if (j.contains(key)) out = get_number(j, key, path, std::nullopt);
  };
  opt("kappa1", m.kappa1);
  opt("kappa2", m.kappa2);
  opt("kappa3", m.kappa3);
  opt("kappa4", m.kappa4);
  opt("kappa5", m.kappa5);
  opt("Theta1", m.Theta1);
  opt("Lambda1", m.Lambda1);
  opt("Lambda2", m.Lambda2);
  if (j.contains("N0")) m.N0 = get_int(j, "N0", path, std::nullopt);
  if (j.contains("M0")) m.M0 = get_int(j, "M0", path, std::nullopt);
  wrap(path, [&] {
    m.check();
    return 0;
  });
  return m;
}

json meta_to_json(const ConductivityMeta& m) {
  json j = json::object();
  auto put = [&](const char* key, const auto& v) {
    if (v) j[key] = *v;
  };
  put("kappa1", m.kappa1);
  put("kappa2", m.kappa2);
  put("kappa3", m.kappa3);
  put("kappa4", m.kappa4);
  put("kappa5", m.kappa5);
  put("N0", m.N0);
  put("M0", m.M0);
  put("Theta1", m.Theta1);
  put("Lambda1", m.Lambda1);
  put("Lambda2", m.Lambda2);
  return j;
}

json field_summary(const ConductivityField& C) {
  return json{{"family", C.family()}, {"d", C.dim()},           {"alpha", C.alpha()},
              {"rho", C.rho()},       {"stationary", C.stationary()}, {"meta", meta_to_json(C.meta())}};
}

KernelSpec kernel_from_json(const json& spec, int d, double alpha, const std::string& path) {
  if (!spec.is_object()) throw SpecError(path, "expected an object");
  const auto& type_v = require(spec, "type", path);
  if (!type_v.is_string()) throw SpecError(path + "/type", "expected a string");
  const auto type = type_v.get<std::string>();
  KernelSpec k;
  if (type == "isotropic") {
    k = isotropic_kernel(d, alpha, get_number(spec, "scale", path, 1.0));
  } else if (type == "cone") {
    if (d != 2) throw SpecError(path + "/type", "cone kernel requires d = 2");
    const double g = get_number(spec, "gamma", path, 1.0);
    if (!(g > 0.0)) throw SpecError(path + "/gamma", "gamma must be positive");
    k = cone_kernel(g, alpha);
  } else if (type == "axes") {
    if (d != 2) throw SpecError(path + "/type", "axes kernel requires d = 2");
    k = axes_kernel(alpha, get_number(spec, "halfwidth", path, 0.0));
  } else if (type == "expr") {
    const auto& e = require(spec, "expression", path);
    if (!e.is_string()) throw SpecError(path + "/expression", "expected a string");
    std::vector<double> breaks;
    if (spec.contains("breaks")) {
      if (!spec["breaks"].is_array()) throw SpecError(path + "/breaks", "expected an array");
      for (const auto& b : spec["breaks"]) breaks.push_back(b.get<double>());
    }
    k = wrap(path + "/expression", [&] { return expr_kernel(d, alpha, e.get<std::string>(), breaks); });
    if (spec.contains("kappa5")) k.kappa5 = get_number(spec, "kappa5", path, std::nullopt);
    if (spec.contains("kappa4")) k.kappa4 = get_number(spec, "kappa4", path, std::nullopt);
    if (spec.contains("Lambda1")) k.lambda1 = get_number(spec, "Lambda1", path, std::nullopt);
  } else {
    throw SpecError(path + "/type", "unknown kernel type '" + type + "'");
  }
  return k;
}

ConductivityField field_from_json(const json& spec, const std::string& path, const std::string& base_dir) {
  if (!spec.is_object()) throw SpecError(path, "expected an object");
  const auto& fam_v = require(spec, "family", path);
  if (!fam_v.is_string()) throw SpecError(path + "/family", "expected a string");
  const auto family = fam_v.get<std::string>();
  const double alpha = get_number(spec, "alpha", path, 1.0);
  check_alpha(alpha, path);
  const json params = spec.contains("params") ? spec["params"] : json::object();
  const std::string ppath = path + "/params";
  if (!params.is_object()) throw SpecError(ppath, "expected an object");

  std::optional<ConductivityField> field;
  if (family == "kernel_cells") {
    const int d = get_int(spec, "d", path, 1);
    check_dim(d, path);
    const double n = get_number(spec, "n", path, std::nullopt);
    if (!(n > 0.0)) throw SpecError(path + "/n", "n must be positive");
    const auto k = kernel_from_json(require(spec, "kernel", path), d, alpha, path + "/kernel");
    QuadratureConfig q;
    if (spec.contains("quadrature")) {
      const auto& qj = spec["quadrature"];
      q.order = get_int(qj, "order", path + "/quadrature", q.order);
      q.tolerance = get_number(qj, "tolerance", path + "/quadrature", q.tolerance);
      q.max_refinements = get_int(qj, "max_refinements", path + "/quadrature", q.max_refinements);
      if (q.order < 1 || q.order > 64) throw SpecError(path + "/quadrature/order", "order must be 1..64");
    }
    field = build_from_kernel(k, n, q);
  } else {
    const double rho = get_number(spec, "rho", path, 1.0);
    if (!(rho > 0.0)) throw SpecError(path + "/rho", "rho must be positive");
    if (family == "isotropic_stable") {
      const int d = get_int(spec, "d", path, 1);
      check_dim(d, path);
      std::optional<double> kappa;
      if (params.contains("kappa")) kappa = get_number(params, "kappa", ppath, std::nullopt);
      field = wrap(ppath, [&] { return isotropic_stable(d, alpha, rho, kappa); });
    } else if (family == "double_cone") {
      if (spec.contains("d") && get_int(spec, "d", path, 2) != 2)
        throw SpecError(path + "/d", "double_cone requires d = 2");
      DoubleConeParams p;
      p.alpha = alpha;
      p.rho = rho;
      p.gamma = get_number(params, "gamma", ppath, 1.0);
      p.a = get_number(params, "a", ppath, 1.0);
      p.b = get_number(params, "b", ppath, std::max(1.0, p.a));
      if (params.contains("g")) {
        if (!params["g"].is_string()) throw SpecError(ppath + "/g", "expected an expression string");
        const Expression g = wrap(ppath + "/g", [&] { return Expression(params["g"].get<std::string>()); });
        const double lo = p.a, hi = p.b;
        p.g = [g, lo, hi](const GridPoint& x, const GridPoint& y) {
          ExprArgs a;
          a.d = 2;
          for (int i = 0; i < 2; ++i) {
            a.x[i] = static_cast<double>(x.k[i]);
            a.y[i] = static_cast<double>(y.k[i]);
            a.h[i] = a.y[i] - a.x[i];
          }
          a.r = std::hypot(a.h[0], a.h[1]);
          const double v = g.eval(a);
          if (!(v >= lo && v <= hi)) throw ContractViolation("cone modulation g left its range [a, b]");
          return v;
        };
      }
      field = wrap(ppath, [&] { return double_cone(p); });
    } else if (family == "axes_counterexample") {
      field = axes_counterexample(alpha, rho);
    } else if (family == "table") {
      const int d = get_int(spec, "d", path, 1);
      check_dim(d, path);
      if (params.contains("csv")) {
        std::filesystem::path file = params["csv"].get<std::string>();
        if (file.is_relative() && !base_dir.empty()) file = std::filesystem::path(base_dir) / file;
        field = wrap(ppath + "/csv", [&] { return load_table_csv(file.string(), d, alpha, rho); });
      } else {
        const auto& rows = require(params, "entries", ppath);
        if (!rows.is_array()) throw SpecError(ppath + "/entries", "expected an array");
        const ScaledLattice lat(d, rho);
        std::vector<TableEntry> entries;
        for (std::size_t i = 0; i < rows.size(); ++i) {
          const std::string rp = ppath + "/entries/" + std::to_string(i);
          const auto& r = rows[i];
          if (!r.is_array() || r.size() != static_cast<std::size_t>(2 * d + 1))
            throw SpecError(rp, "expected [x_1..x_d, y_1..y_d, value]");
          std::vector<double> v;
          for (const auto& c : r) {
            if (!c.is_number()) throw SpecError(rp, "non-numeric entry");
            v.push_back(c.get<double>());
          }
          TableEntry e;
          e.x = wrap(rp, [&] { return lat.at(std::span<const double>(v.data(), d)); });
          e.y = wrap(rp, [&] { return lat.at(std::span<const double>(v.data() + d, d)); });
          e.value = v[2 * d];
          entries.push_back(e);
        }
        field = wrap(ppath, [&] { return table_field(d, alpha, rho, entries); });
      }
    } else {
      throw SpecError(path + "/family", "unknown family '" + family + "'");
    }
  }
  if (spec.contains("meta")) {
    ConductivityMeta m = field->meta();
    const auto over = meta_from_json(spec["meta"], path + "/meta");
    auto merge = [](auto& dst, const auto& src) {
      if (src) dst = src;
    };
    merge(m.kappa1, over.kappa1);
    merge(m.kappa2, over.kappa2);
    merge(m.kappa3, over.kappa3);
    merge(m.kappa4, over.kappa4);
    merge(m.kappa5, over.kappa5);
    merge(m.N0, over.N0);
    merge(m.M0, over.M0);
    merge(m.Theta1, over.Theta1);
    merge(m.Lambda1, over.Lambda1);
    merge(m.Lambda2, over.Lambda2);
    field = wrap(path + "/meta", [&] { return field->with_meta(m); });
  }
  return *field;
}

}  // namespace jumplab
