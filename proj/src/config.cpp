#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "fcmwave/errors.hpp"
#include "fcmwave/harness.hpp"
#include "json.hpp"

namespace fcmwave {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError("unknown config key '" + (where.empty() ? "" : where + ".") + it.key() + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

Vec3 read_vec3(const json& j, const char* key, const Vec3& fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_array() || v.size() != 3) throw ConfigError(std::string(key) + ": expected [x, y, z]");
  Vec3 x;
  for (int i = 0; i < 3; ++i) {
    if (!v[static_cast<std::size_t>(i)].is_number()) throw ConfigError(std::string(key) + ": not a number");
    x[i] = v[static_cast<std::size_t>(i)].get<double>();
  }
  return x;
}

json config_to_json(const BenchmarkConfig& c) {
  json j;
  j["geometry"] = {{"l_p", c.l_p},
                   {"l_e", c.l_e},
                   {"angles_deg", {c.angles.phi, c.angles.theta, c.angles.psi}}};
  j["source"] = {{"x_l", {c.source.x_l_local[0], c.source.x_l_local[1], c.source.x_l_local[2]}},
                 {"sigma_s", c.source.sigma_s},
                 {"f_e", c.source.f_e}};
  j["T"] = c.T;
  j["material"] = {{"rho", c.material.rho}, {"c", c.material.c}};
  j["basis"] = {{"family", to_string(c.spec.family)}, {"p", c.spec.p}, {"n_e", c.spec.n_e}};
  j["boundary_fitted"] = c.boundary_fitted;
  j["octree_depth"] = c.octree_depth;
  j["discard_depth"] = c.discard_depth;
  j["alpha"] = c.stabilization.alpha;
  j["epsilon"] = c.stabilization.epsilon;
  j["f_lambda"] = c.stabilization.f_lambda;
  j["lumping"] = to_string(c.stabilization.lumping);
  j["integrator"] = to_string(c.integrator.kind);
  j["beta"] = c.integrator.beta;
  j["gamma"] = c.integrator.gamma;
  if (std::isfinite(c.integrator.dt_max))
    j["dt_max"] = c.integrator.dt_max;
  else
    j["dt_max"] = nullptr;
  j["n_t"] = c.integrator.n_t;
  j["n_s"] = c.n_s;
  j["load"] = {{"extra_points", c.load.extra_points}, {"cutoff", c.load.cutoff}};
  j["reference"] = {{"n_e", c.reference.n_e},
                    {"p", c.reference.p},
                    {"dt", c.reference.dt},
                    {"csv", c.reference.csv}};
  j["power"] = {{"tol", c.power_tol}, {"max_iter", c.power_max_iter}, {"seed", c.seed}};
  j["study"] = {{"n_e", c.study_n_e}};
  json configs = json::array();
  for (const std::string& s : c.timing_configs) configs.push_back(json::parse(s));
  j["timing"] = {{"repetitions", c.repetitions}, {"configs", configs}};
  return j;
}

BenchmarkConfig config_from_json(const json& j) {
  BenchmarkConfig c;
  check_keys(j,
             {"geometry", "source", "T", "material", "basis", "boundary_fitted", "octree_depth",
              "discard_depth", "alpha", "epsilon", "f_lambda", "lumping", "integrator", "beta",
              "gamma", "dt_max", "n_t", "n_s", "load", "reference", "power", "study", "timing"},
             "");
  if (j.contains("geometry")) {
    const json& g = j.at("geometry");
    check_keys(g, {"l_p", "l_e", "angles_deg"}, "geometry");
    read(g, "l_p", c.l_p);
    read(g, "l_e", c.l_e);
    const Vec3 a = read_vec3(g, "angles_deg", Vec3(c.angles.phi, c.angles.theta, c.angles.psi));
    c.angles = {a[0], a[1], a[2]};
  }
  c.source.x_l_local = Vec3(-0.5 * c.l_p, 0.0, 0.0);
  if (j.contains("source")) {
    const json& s = j.at("source");
    check_keys(s, {"x_l", "sigma_s", "f_e"}, "source");
    c.source.x_l_local = read_vec3(s, "x_l", c.source.x_l_local);
    read(s, "sigma_s", c.source.sigma_s);
    read(s, "f_e", c.source.f_e);
  }
  read(j, "T", c.T);
  if (j.contains("material")) {
    const json& m = j.at("material");
    check_keys(m, {"rho", "c"}, "material");
    read(m, "rho", c.material.rho);
    read(m, "c", c.material.c);
  }
  if (j.contains("basis")) {
    const json& b = j.at("basis");
    check_keys(b, {"family", "p", "n_e"}, "basis");
    std::string family = to_string(c.spec.family);
    read(b, "family", family);
    c.spec.family = basis_family_from_string(family);
    read(b, "p", c.spec.p);
    read(b, "n_e", c.spec.n_e);
  }
  read(j, "boundary_fitted", c.boundary_fitted);
  read(j, "octree_depth", c.octree_depth);
  read(j, "discard_depth", c.discard_depth);
  read(j, "alpha", c.stabilization.alpha);
  read(j, "epsilon", c.stabilization.epsilon);
  read(j, "f_lambda", c.stabilization.f_lambda);
  if (j.contains("lumping")) {
    std::string l;
    read(j, "lumping", l);
    c.stabilization.lumping = lumping_from_string(l);
  }
  if (j.contains("integrator")) {
    std::string s;
    read(j, "integrator", s);
    c.integrator.kind = integrator_from_string(s);
  }
  read(j, "beta", c.integrator.beta);
  read(j, "gamma", c.integrator.gamma);
  if (j.contains("dt_max") && !j.at("dt_max").is_null()) {
    const json& v = j.at("dt_max");
    if (v.is_string() && v.get<std::string>() == "inf")
      c.integrator.dt_max = std::numeric_limits<double>::infinity();
    else
      read(j, "dt_max", c.integrator.dt_max);
  }
  read(j, "n_t", c.integrator.n_t);
  read(j, "n_s", c.n_s);
  if (j.contains("load")) {
    const json& l = j.at("load");
    check_keys(l, {"extra_points", "cutoff"}, "load");
    read(l, "extra_points", c.load.extra_points);
    read(l, "cutoff", c.load.cutoff);
  }
  if (j.contains("reference")) {
    const json& r = j.at("reference");
    check_keys(r, {"n_e", "p", "dt", "csv"}, "reference");
    read(r, "n_e", c.reference.n_e);
    read(r, "p", c.reference.p);
    read(r, "dt", c.reference.dt);
    read(r, "csv", c.reference.csv);
  }
  if (j.contains("power")) {
    const json& p = j.at("power");
    check_keys(p, {"tol", "max_iter", "seed"}, "power");
    read(p, "tol", c.power_tol);
    read(p, "max_iter", c.power_max_iter);
    read(p, "seed", c.seed);
  }
  if (j.contains("study")) {
    const json& s = j.at("study");
    check_keys(s, {"n_e"}, "study");
    read(s, "n_e", c.study_n_e);
  }
  if (j.contains("timing")) {
    const json& t = j.at("timing");
    check_keys(t, {"repetitions", "configs"}, "timing");
    read(t, "repetitions", c.repetitions);
    if (t.contains("configs")) {
      if (!t.at("configs").is_array()) throw ConfigError("timing.configs: expected an array");
      for (const json& o : t.at("configs")) {
        if (!o.is_object()) throw ConfigError("timing.configs: entries must be objects");
        c.timing_configs.push_back(o.dump());
      }
    }
  }
  c.load.octree_depth = c.octree_depth;
  c.load.alpha = c.stabilization.alpha;
  c.validate();
  return c;
}

}  // namespace

ImmersedGeometry BenchmarkConfig::geometry() const {
  return ImmersedGeometry(l_p, l_e, angles);
}

void BenchmarkConfig::validate() const {
  if (!(l_p > 0.0) || !(l_e > l_p)) throw ConfigError("geometry: need 0 < l_p < l_e");
  if (!(T > 0.0)) throw ConfigError("T must be positive");
  if (!(source.sigma_s > 0.0) || !(source.f_e > 0.0))
    throw ConfigError("source: sigma_s and f_e must be positive");
  if (!(material.rho > 0.0) || !(material.c > 0.0))
    throw ConfigError("material: rho and c must be positive");
  spec.validate();
  stabilization.validate();
  if (octree_depth < 0 || discard_depth < 0) throw ConfigError("octree depths must be >= 0");
  if (integrator.n_t < 0) throw ConfigError("n_t must be >= 0");
  if (!(integrator.dt_max > 0.0)) throw ConfigError("dt_max must be positive");
  if (n_s < 1) throw ConfigError("n_s must be >= 1");
  if (integrator.n_t > 0 && integrator.n_t % n_s != 0)
    throw ConfigError("n_t must be a multiple of n_s");
  if (reference.n_e < 1 || reference.p < 1 || !(reference.dt > 0.0))
    throw ConfigError("reference: need n_e >= 1, p >= 1, dt > 0");
  if (!(power_tol > 0.0) || power_max_iter < 1) throw ConfigError("power: bad tol/max_iter");
  if (repetitions < 1) throw ConfigError("timing.repetitions must be >= 1");
  if (integrator.kind == Integrator::IMEX && spec.family != BasisFamily::GllLagrange)
    throw ConfigError("IMEX requires the GLL-Lagrange basis");
}

BenchmarkConfig BenchmarkConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

BenchmarkConfig BenchmarkConfig::from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return from_json_text(ss.str());
}

std::string BenchmarkConfig::to_json_text() const { return config_to_json(*this).dump(2); }

BenchmarkConfig BenchmarkConfig::with_overrides(const std::string& json_object) const {
  json base = config_to_json(*this);
  json patch;
  try {
    patch = json::parse(json_object);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("override is not valid JSON: ") + e.what());
  }
  if (!patch.is_object()) throw ConfigError("override must be a JSON object");
  base.merge_patch(patch);
  // merge_patch deletes keys set to null; keep an explicit infinite dt_max.
  if (patch.contains("dt_max") && patch.at("dt_max").is_null()) base["dt_max"] = nullptr;
  return config_from_json(base);
}

}  // namespace fcmwave
