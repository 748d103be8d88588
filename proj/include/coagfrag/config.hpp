#pragma once

// Scenario configuration and its JSON form.
//
//   {
//     "model":   { "N": 200, "laws": { "g": 0, "growth_exp": 0, "d": 0, "decay_exp": 0,
//                                      "s": 0, "sed_exp": 0, "a": 1, "frag_exp": 1 } },
//     "kernels": { "fragmentation": { "kind": "binary" },
//                  "coagulation":   { "kind": "brownian_like", "k1": 0.005 } },
//     "initial": { "kind": "block", "lo": 5, "hi": 20, "value": 10 },
//     "solver":  { "method": "implicit_adaptive", "rtol": 1e-8, ... },
//     "norm":    { "p": 2, "weight_exp": 0 },
//     "run":     { "name": "example1", "t_end": 1, "output_grid_points": 101 }
//   }
//
// Unknown keys are errors. Missing laws default to 0, missing solver entries
// to SolverConfig::for_interval(0, t_end). Explicit initial data is
// "initial": { "kind": "explicit", "values": [u_1, u_2, ...] } and is
// zero-padded up to N.

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "coagfrag/analysis.hpp"
#include "coagfrag/errors.hpp"
#include "coagfrag/integrator.hpp"
#include "coagfrag/kernels.hpp"

namespace coagfrag {

using Json = nlohmann::ordered_json;

struct InitialCondition {
  enum class Kind { block, explicit_values };

  Kind kind = Kind::block;
  SizeIndex lo = 1;
  SizeIndex hi = 1;
  double value = 0.0;
  std::vector<double> values;

  static InitialCondition block(SizeIndex lo, SizeIndex hi, double value) {
    InitialCondition ic;
    ic.lo = lo;
    ic.hi = hi;
    ic.value = value;
    return ic;
  }

  static InitialCondition explicit_values(std::vector<double> values) {
    InitialCondition ic;
    ic.kind = Kind::explicit_values;
    ic.values = std::move(values);
    return ic;
  }

  /// Largest size carrying nonzero initial density (0 if none).
  SizeIndex support() const {
    if (kind == Kind::block) return value == 0.0 ? 0 : hi;
    for (SizeIndex k = values.size(); k > 0; --k) {
      if (values[k - 1] != 0.0) return k;
    }
    return 0;
  }

  void validate(SizeIndex n) const {
    if (kind == Kind::block) {
      if (lo < 1 || lo > hi || hi > n) {
        throw ValidationError("initial.lo", "block needs 1 <= lo <= hi <= N (lo = " +
                                                std::to_string(lo) + ", hi = " +
                                                std::to_string(hi) + ", N = " +
                                                std::to_string(n) + ")");
      }
      if (!std::isfinite(value) || value < 0.0) {
        throw ValidationError("initial.value", "must be finite and >= 0");
      }
      return;
    }
    if (values.size() > n) {
      throw ValidationError("initial.values", "has " + std::to_string(values.size()) +
                                                  " entries but N = " + std::to_string(n));
    }
    for (double v : values) {
      if (!std::isfinite(v) || v < 0.0) {
        throw ValidationError("initial.values", "entries must be finite and >= 0");
      }
    }
  }

  StateVector state(SizeIndex n) const {
    validate(n);
    StateVector u = StateVector::Zero(static_cast<Eigen::Index>(n));
    if (kind == Kind::block) {
      for (SizeIndex i = lo; i <= hi; ++i) u[static_cast<Eigen::Index>(i) - 1] = value;
    } else {
      for (std::size_t k = 0; k < values.size(); ++k) u[static_cast<Eigen::Index>(k)] = values[k];
    }
    return u;
  }

  bool operator==(const InitialCondition&) const = default;
};

struct ScenarioConfig {
  std::string name = "scenario";
  SizeIndex N = 200;
  FragmentationKernelSpec frag;
  CoagulationKernelSpec coag;
  RateLaws laws;
  InitialCondition initial;
  double t_end = 1.0;
  SolverConfig solver = SolverConfig::for_interval(0.0, 1.0);
  NormSpec norm;
  std::size_t output_grid_points = 101;

  void validate() const {
    if (N < 2 || N > kMaxTruncationSize) {
      throw ValidationError("model.N", "must lie in [2, " + std::to_string(kMaxTruncationSize) + "]");
    }
    laws.validate();
    initial.validate(N);
    if (!std::isfinite(t_end) || t_end <= 0.0) throw ValidationError("run.t_end", "must be > 0");
    if (output_grid_points < 2) throw ValidationError("run.output_grid_points", "must be >= 2");
    solver.validate();
    norm.validate();
  }

  TruncatedSystem system() const { return TruncatedSystem(N, frag, coag, laws); }
  StateVector initial_state() const { return initial.state(N); }
  std::vector<double> output_grid() const { return uniform_grid(0.0, t_end, output_grid_points); }

  bool operator==(const ScenarioConfig&) const = default;
};

namespace detail {

// Keys accepted in each JSON object, by dotted path.
inline const std::map<std::string, std::set<std::string>, std::less<>>& schema() {
  static const std::map<std::string, std::set<std::string>, std::less<>> keys{
      {"", {"model", "kernels", "initial", "solver", "norm", "run"}},
      {"model", {"N", "laws"}},
      {"model.laws", {"g", "growth_exp", "d", "decay_exp", "s", "sed_exp", "a", "frag_exp"}},
      {"kernels", {"fragmentation", "coagulation"}},
      {"kernels.fragmentation", {"kind", "sigma"}},
      {"kernels.coagulation", {"kind", "k1", "k2", "k3"}},
      {"initial", {"kind", "lo", "hi", "value", "values"}},
      {"solver",
       {"method", "rtol", "atol", "h_init", "h_min", "h_max", "max_steps", "newton_tol",
        "newton_max_iters"}},
      {"norm", {"p", "weight_exp"}},
      {"run", {"name", "t_end", "output_grid_points"}},
  };
  return keys;
}

inline std::string join_path(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

inline void check_keys(const Json& obj, const std::string& path) {
  if (!obj.is_object()) throw ValidationError(path.empty() ? "config" : path, "must be an object");
  const auto& allowed = schema().at(path);
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) throw ValidationError(join_path(path, key), "unknown key");
    if (schema().contains(join_path(path, key))) check_keys(value, join_path(path, key));
  }
}

inline const Json* find(const Json& root, std::string_view dotted) {
  const Json* node = &root;
  std::size_t start = 0;
  while (start <= dotted.size()) {
    const std::size_t dot = std::min(dotted.find('.', start), dotted.size());
    const std::string key(dotted.substr(start, dot - start));
    if (!node->is_object() || !node->contains(key)) return nullptr;
    node = &(*node)[key];
    start = dot + 1;
  }
  return node;
}

inline double get_number(const Json& root, const std::string& path, double fallback) {
  const Json* v = find(root, path);
  if (!v) return fallback;
  if (!v->is_number()) throw ValidationError(path, "expected a number");
  return v->get<double>();
}

inline double require_number(const Json& root, const std::string& path) {
  if (!find(root, path)) throw ValidationError(path, "is required");
  return get_number(root, path, 0.0);
}

inline long long get_integer(const Json& root, const std::string& path, long long fallback) {
  const Json* v = find(root, path);
  if (!v) return fallback;
  if (v->is_number_integer()) return v->get<long long>();
  if (v->is_number_float()) {
    const double d = v->get<double>();
    if (std::floor(d) == d && std::abs(d) < 9e15) return static_cast<long long>(d);
  }
  throw ValidationError(path, "expected an integer");
}

inline SizeIndex get_size(const Json& root, const std::string& path, long long fallback) {
  const long long v = get_integer(root, path, fallback);
  if (v < 0) throw ValidationError(path, "must be >= 0");
  return static_cast<SizeIndex>(v);
}

inline std::string get_string(const Json& root, const std::string& path, const std::string& fallback) {
  const Json* v = find(root, path);
  if (!v) return fallback;
  if (!v->is_string()) throw ValidationError(path, "expected a string");
  return v->get<std::string>();
}

}  // namespace detail

inline ScenarioConfig config_from_json(const Json& root) {
  using namespace detail;
  check_keys(root, "");
  ScenarioConfig cfg;

  cfg.name = get_string(root, "run.name", cfg.name);
  if (!find(root, "model.N")) throw ValidationError("model.N", "is required");
  cfg.N = get_size(root, "model.N", 0);
  cfg.t_end = get_number(root, "run.t_end", cfg.t_end);
  {
    const long long points = get_integer(root, "run.output_grid_points", 101);
    if (points < 2) throw ValidationError("run.output_grid_points", "must be >= 2");
    cfg.output_grid_points = static_cast<std::size_t>(points);
  }

  auto& L = cfg.laws;
  L.g = get_number(root, "model.laws.g", 0.0);
  L.growth_exp = get_number(root, "model.laws.growth_exp", 0.0);
  L.d = get_number(root, "model.laws.d", 0.0);
  L.decay_exp = get_number(root, "model.laws.decay_exp", 0.0);
  L.s = get_number(root, "model.laws.s", 0.0);
  L.sed_exp = get_number(root, "model.laws.sed_exp", 0.0);
  L.a = get_number(root, "model.laws.a", 0.0);
  L.frag_exp = get_number(root, "model.laws.frag_exp", 0.0);

  const std::string frag_kind = get_string(root, "kernels.fragmentation.kind", "binary");
  if (frag_kind == "binary") {
    if (find(root, "kernels.fragmentation.sigma")) {
      throw ValidationError("kernels.fragmentation.sigma", "only applies to the powerlaw kernel");
    }
    cfg.frag = FragmentationKernelSpec::binary();
  } else if (frag_kind == "powerlaw") {
    cfg.frag = FragmentationKernelSpec::powerlaw(require_number(root, "kernels.fragmentation.sigma"));
  } else {
    throw ValidationError("kernels.fragmentation.kind", "expected binary or powerlaw, got " + frag_kind);
  }

  const std::string coag_kind = get_string(root, "kernels.coagulation.kind", "brownian_like");
  if (coag_kind == "brownian_like") {
    for (const char* key : {"kernels.coagulation.k2", "kernels.coagulation.k3"}) {
      if (find(root, key)) throw ValidationError(key, "only applies to the product kernel");
    }
    cfg.coag = CoagulationKernelSpec::brownian_like(require_number(root, "kernels.coagulation.k1"));
  } else if (coag_kind == "product") {
    if (find(root, "kernels.coagulation.k1")) {
      throw ValidationError("kernels.coagulation.k1", "only applies to the brownian_like kernel");
    }
    cfg.coag = CoagulationKernelSpec::product(require_number(root, "kernels.coagulation.k2"),
                                              get_number(root, "kernels.coagulation.k3", 0.0));
  } else {
    throw ValidationError("kernels.coagulation.kind",
                          "expected brownian_like or product, got " + coag_kind);
  }

  const std::string init_kind = get_string(root, "initial.kind", "block");
  if (init_kind == "block") {
    if (find(root, "initial.values")) {
      throw ValidationError("initial.values", "only applies to explicit initial data");
    }
    cfg.initial = InitialCondition::block(get_size(root, "initial.lo", 1), get_size(root, "initial.hi", 1),
                                          require_number(root, "initial.value"));
  } else if (init_kind == "explicit") {
    for (const char* key : {"initial.lo", "initial.hi", "initial.value"}) {
      if (find(root, key)) throw ValidationError(key, "only applies to block initial data");
    }
    const Json* values = find(root, "initial.values");
    if (!values || !values->is_array()) throw ValidationError("initial.values", "expected an array");
    std::vector<double> v;
    for (const auto& x : *values) {
      if (!x.is_number()) throw ValidationError("initial.values", "entries must be numbers");
      v.push_back(x.get<double>());
    }
    cfg.initial = InitialCondition::explicit_values(std::move(v));
  } else {
    throw ValidationError("initial.kind", "expected block or explicit, got " + init_kind);
  }

  SolverConfig& s = cfg.solver;
  s = SolverConfig::for_interval(0.0, std::isfinite(cfg.t_end) && cfg.t_end > 0.0 ? cfg.t_end : 1.0);
  const std::string method = get_string(root, "solver.method", to_string(s.method));
  if (method == "implicit_adaptive") {
    s.method = Method::implicit_adaptive;
  } else if (method == "explicit_reference") {
    s.method = Method::explicit_reference;
  } else {
    throw ValidationError("solver.method",
                          "expected implicit_adaptive or explicit_reference, got " + method);
  }
  s.rtol = get_number(root, "solver.rtol", s.rtol);
  s.atol = get_number(root, "solver.atol", s.atol);
  s.h_init = get_number(root, "solver.h_init", s.h_init);
  s.h_min = get_number(root, "solver.h_min", s.h_min);
  s.h_max = get_number(root, "solver.h_max", s.h_max);
  s.max_steps = static_cast<long>(get_integer(root, "solver.max_steps", s.max_steps));
  s.newton_tol = get_number(root, "solver.newton_tol", s.newton_tol);
  s.newton_max_iters = static_cast<int>(get_integer(root, "solver.newton_max_iters", s.newton_max_iters));

  cfg.norm.p = get_number(root, "norm.p", cfg.norm.p);
  cfg.norm.weight_exp = get_number(root, "norm.weight_exp", cfg.norm.weight_exp);

  cfg.validate();
  return cfg;
}

inline Json config_to_json(const ScenarioConfig& cfg) {
  Json j;
  const auto& L = cfg.laws;
  j["model"] = {{"N", cfg.N},
                {"laws",
                 {{"g", L.g},
                  {"growth_exp", L.growth_exp},
                  {"d", L.d},
                  {"decay_exp", L.decay_exp},
                  {"s", L.s},
                  {"sed_exp", L.sed_exp},
                  {"a", L.a},
                  {"frag_exp", L.frag_exp}}}};

  Json frag = {{"kind", to_string(cfg.frag.kind())}};
  if (cfg.frag.kind() == FragmentationKind::powerlaw) frag["sigma"] = cfg.frag.sigma();
  Json coag = {{"kind", to_string(cfg.coag.kind())}};
  if (cfg.coag.kind() == CoagulationKind::brownian_like) {
    coag["k1"] = cfg.coag.k1();
  } else {
    coag["k2"] = cfg.coag.k2();
    coag["k3"] = cfg.coag.k3();
  }
  j["kernels"] = {{"fragmentation", frag}, {"coagulation", coag}};

  if (cfg.initial.kind == InitialCondition::Kind::block) {
    j["initial"] = {{"kind", "block"},
                    {"lo", cfg.initial.lo},
                    {"hi", cfg.initial.hi},
                    {"value", cfg.initial.value}};
  } else {
    j["initial"] = {{"kind", "explicit"}, {"values", cfg.initial.values}};
  }

  const auto& s = cfg.solver;
  j["solver"] = {{"method", to_string(s.method)},
                 {"rtol", s.rtol},
                 {"atol", s.atol},
                 {"h_init", s.h_init},
                 {"h_min", s.h_min},
                 {"h_max", s.h_max},
                 {"max_steps", s.max_steps},
                 {"newton_tol", s.newton_tol},
                 {"newton_max_iters", s.newton_max_iters}};
  j["norm"] = {{"p", cfg.norm.p}, {"weight_exp", cfg.norm.weight_exp}};
  j["run"] = {{"name", cfg.name},
              {"t_end", cfg.t_end},
              {"output_grid_points", cfg.output_grid_points}};
  return j;
}

/// Expands shorthand override keys: "laws.x" -> "model.laws.x",
/// "N" -> "model.N", "t_end" / "name" / "output_grid_points" -> "run.*",
/// "fragmentation.x" / "coagulation.x" -> "kernels.*.x".
inline std::string canonical_key(const std::string& key) {
  const auto head = key.substr(0, key.find('.'));
  if (detail::schema().at("").contains(head)) return key;
  if (head == "laws") return "model." + key;
  if (head == "fragmentation" || head == "coagulation") return "kernels." + key;
  if (key == "N") return "model.N";
  if (key == "t_end" || key == "name" || key == "output_grid_points") return "run." + key;
  return key;
}

/// Parses an override value: JSON literal if it parses as one, else a bare string.
inline Json parse_override_value(const std::string& text) {
  Json v = Json::parse(text, nullptr, false);
  if (v.is_discarded()) return Json(text);
  return v;
}

/// Applies "key=value" overrides to the JSON form of `base` and re-parses.
inline ScenarioConfig apply_overrides(const ScenarioConfig& base,
                                      const std::vector<std::string>& overrides) {
  Json j = config_to_json(base);
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ValidationError(item, "override must have the form key=value");
    }
    const std::string key = canonical_key(item.substr(0, eq));
    const auto dot = key.rfind('.');
    const std::string parent = dot == std::string::npos ? "" : key.substr(0, dot);
    const std::string leaf = dot == std::string::npos ? key : key.substr(dot + 1);
    const auto section = detail::schema().find(parent);
    if (section == detail::schema().end() || !section->second.contains(leaf) ||
        detail::schema().contains(key)) {
      throw ValidationError(key, "unknown configuration key");
    }
    Json* node = &j;
    std::size_t start = 0;
    while (start < parent.size()) {
      const std::size_t next = std::min(parent.find('.', start), parent.size());
      node = &(*node)[parent.substr(start, next - start)];
      start = next + 1;
    }
    (*node)[leaf] = parse_override_value(item.substr(eq + 1));
  }
  return config_from_json(j);
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config", "cannot open " + path);
  Json j = Json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ValidationError("config", path + " is not valid JSON");
  return config_from_json(j);
}

}  // namespace coagfrag
