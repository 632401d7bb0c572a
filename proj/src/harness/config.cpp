#include <fstream>
#include <sstream>

#include <json.hpp>
#include <toml.hpp>

#include <gwrw/harness.hpp>
#include <gwrw/offspring.hpp>
#include <gwrw/walk.hpp>

namespace gwrw::harness {

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"scaling",  "subsequence", "nonconvergence", "trap-time",
                                              "w-law",    "limit-law",   "toy-iid"};
  return names;
}

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::Config, what); }

template <class T>
void get(const toml::table& t, const char* key, T& out) {
  const auto* node = t.get(key);
  if (!node) return;
  if constexpr (std::is_same_v<T, double>) {
    if (auto v = node->value<double>()) out = *v;
    else bad(std::string("expected a number for '") + key + "'");
  } else if constexpr (std::is_same_v<T, bool>) {
    if (auto v = node->value<bool>()) out = *v;
    else bad(std::string("expected a boolean for '") + key + "'");
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (auto v = node->value<std::string>()) out = *v;
    else bad(std::string("expected a string for '") + key + "'");
  } else if constexpr (std::is_integral_v<T>) {
    auto v = node->value<std::int64_t>();
    if (!v || *v < 0) bad(std::string("expected a nonnegative integer for '") + key + "'");
    out = T(*v);
  } else {
    const auto* arr = node->as_array();
    if (!arr) bad(std::string("expected an array for '") + key + "'");
    out.clear();
    for (const auto& e : *arr) {
      using V = typename T::value_type;
      if constexpr (std::is_integral_v<V>) {
        auto v = e.value<std::int64_t>();
        if (!v) bad(std::string("expected integers in '") + key + "'");
        out.push_back(V(*v));
      } else {
        auto v = e.value<double>();
        if (!v) bad(std::string("expected numbers in '") + key + "'");
        out.push_back(*v);
      }
    }
  }
}

const toml::table* section(const toml::table& root, const char* name) {
  const auto* n = root.get(name);
  if (!n) return nullptr;
  if (!n->is_table()) bad(std::string("'") + name + "' must be a table");
  return n->as_table();
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "config parse error: " << e.description() << " at line " << e.source().begin.line;
    bad(os.str());
  }
  ExperimentConfig c;
  if (const auto* m = section(root, "model")) {
    if (const auto* off = m->get("offspring")) {
      const auto* t = off->as_table();
      if (!t) bad("'model.offspring' must be a table such as { 0 = 0.2, 2 = 0.8 }");
      c.offspring.clear();
      for (const auto& [k, v] : *t) {
        int key = 0;
        try {
          std::size_t pos = 0;
          key = std::stoi(std::string(k.str()), &pos);
          if (pos != k.str().size() || key < 0) throw std::invalid_argument("");
        } catch (const std::exception&) {
          bad("offspring keys must be nonnegative integers, got '" + std::string(k.str()) + "'");
        }
        auto p = v.value<double>();
        if (!p) bad("offspring probabilities must be numbers");
        c.offspring[key] = *p;
      }
    }
    get(*m, "beta", c.beta);
    get(*m, "epsilon", c.epsilon);
  }
  if (const auto* r = section(root, "run")) {
    get(*r, "seed", c.seed);
    get(*r, "workers", c.workers);
    get(*r, "experiment", c.experiment);
    get(*r, "out", c.out);
  }
  if (const auto* s = section(root, "scaling")) {
    get(*s, "n", c.scaling.n);
    get(*s, "replicas", c.scaling.replicas);
    get(*s, "cap", c.scaling.cap);
    get(*s, "slope_tol", c.scaling.slope_tol);
    get(*s, "bootstrap", c.scaling.bootstrap);
  }
  if (const auto* s = section(root, "subsequence")) {
    get(*s, "lambda", c.subsequence.lambda);
    get(*s, "k_min", c.subsequence.k_min);
    get(*s, "k_max", c.subsequence.k_max);
    get(*s, "replicas", c.subsequence.replicas);
    get(*s, "cap", c.subsequence.cap);
    get(*s, "final_ks", c.subsequence.final_ks);
  }
  if (const auto* s = section(root, "trap-time")) {
    get(*s, "traps", c.trap_time.traps);
    get(*s, "max_vertices", c.trap_time.max_vertices);
    get(*s, "max_height", c.trap_time.max_height);
    get(*s, "excursions", c.trap_time.excursions);
    get(*s, "conditioned_height", c.trap_time.conditioned_height);
    get(*s, "conditioned_samples", c.trap_time.conditioned_samples);
    get(*s, "conditioned_ks", c.trap_time.conditioned_ks);
  }
  if (const auto* s = section(root, "w-law")) {
    get(*s, "n", c.w_law.n);
    get(*s, "replicas", c.w_law.replicas);
    get(*s, "p_floor", c.w_law.p_floor);
    get(*s, "converged_ks", c.w_law.converged_ks);
  }
  if (const auto* s = section(root, "limit-law")) {
    get(*s, "z_samples", c.limit_law.z_samples);
    get(*s, "s_tol", c.limit_law.s_tol);
    get(*s, "x", c.limit_law.x);
    get(*s, "psi_s_samples", c.limit_law.psi_s_samples);
    get(*s, "psi_grid", c.limit_law.psi_grid);
    get(*s, "chi_n", c.limit_law.chi_n);
    get(*s, "chi_replicas", c.limit_law.chi_replicas);
    get(*s, "chi_ks", c.limit_law.chi_ks);
  }
  if (const auto* s = section(root, "nonconvergence")) {
    get(*s, "beta", c.nonconvergence.beta);
    get(*s, "samples", c.nonconvergence.samples);
    get(*s, "z_samples", c.nonconvergence.z_samples);
    get(*s, "rho_blocks", c.nonconvergence.rho_blocks);
    get(*s, "floor_ks", c.nonconvergence.floor_ks);
    get(*s, "same_ks", c.nonconvergence.same_ks);
    get(*s, "bootstrap", c.nonconvergence.bootstrap);
  }
  if (const auto* s = section(root, "toy-iid")) {
    get(*s, "beta", c.toy.beta);
    get(*s, "alpha", c.toy.alpha);
    get(*s, "k_min", c.toy.k_min);
    get(*s, "k_max", c.toy.k_max);
    get(*s, "replicas", c.toy.replicas);
    get(*s, "sub_ks", c.toy.sub_ks);
    get(*s, "off_ks", c.toy.off_ks);
    get(*s, "compare_betas", c.toy.compare_betas);
    get(*s, "variance_level", c.toy.variance_level);
    get(*s, "variance_eps", c.toy.variance_eps);
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void validate(const ExperimentConfig& c) {
  std::vector<double> p;
  for (const auto& [k, v] : c.offspring) {
    if (int(p.size()) <= k) p.resize(std::size_t(k) + 1, 0.0);
    p[std::size_t(k)] = v;
  }
  const OffspringLaw law(p);
  const auto params = derive_params(law, c.beta);
  validate_epsilon(c.epsilon, params.gamma);
  if (c.nonconvergence.beta <= 1) bad("nonconvergence.beta must exceed 1");
  if (c.nonconvergence.rho_blocks < 100) bad("nonconvergence.rho_blocks must be >= 100");
  derive_params(law, c.nonconvergence.beta);
  if (c.subsequence.k_min > c.subsequence.k_max) bad("subsequence.k_min must not exceed k_max");
  if (c.toy.k_min > c.toy.k_max) bad("toy-iid.k_min must not exceed k_max");
  if (!(c.subsequence.lambda > 0)) bad("subsequence.lambda must be positive");
  if (c.scaling.n.size() < 2) bad("scaling.n needs at least two values");
  for (auto n : c.scaling.n)
    if (n < 1) bad("scaling.n values must be >= 1");
  if (c.w_law.n.empty()) bad("w-law.n must not be empty");
  if (c.trap_time.conditioned_height < 1) bad("trap-time.conditioned_height must be >= 1");
  if (!c.experiment.empty()) {
    bool known = false;
    for (const auto& n : experiment_names()) known |= n == c.experiment;
    if (!known) bad("unknown experiment '" + c.experiment + "'");
  }
}

std::string canonical_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json off = nlohmann::ordered_json::object();
  for (const auto& [k, v] : c.offspring) off[std::to_string(k)] = v;
  j["model"] = {{"offspring", off}, {"beta", c.beta}, {"epsilon", c.epsilon}};
  j["run"] = {{"seed", c.seed}, {"experiment", c.experiment}};
  j["scaling"] = {{"n", c.scaling.n},
                  {"replicas", c.scaling.replicas},
                  {"cap", c.scaling.cap},
                  {"slope_tol", c.scaling.slope_tol},
                  {"bootstrap", c.scaling.bootstrap}};
  j["subsequence"] = {{"lambda", c.subsequence.lambda},     {"k_min", c.subsequence.k_min},
                      {"k_max", c.subsequence.k_max},       {"replicas", c.subsequence.replicas},
                      {"cap", c.subsequence.cap},           {"final_ks", c.subsequence.final_ks}};
  j["trap-time"] = {{"traps", c.trap_time.traps},
                    {"max_vertices", c.trap_time.max_vertices},
                    {"max_height", c.trap_time.max_height},
                    {"excursions", c.trap_time.excursions},
                    {"conditioned_height", c.trap_time.conditioned_height},
                    {"conditioned_samples", c.trap_time.conditioned_samples},
                    {"conditioned_ks", c.trap_time.conditioned_ks}};
  j["w-law"] = {{"n", c.w_law.n},
                {"replicas", c.w_law.replicas},
                {"p_floor", c.w_law.p_floor},
                {"converged_ks", c.w_law.converged_ks}};
  j["limit-law"] = {{"z_samples", c.limit_law.z_samples},       {"s_tol", c.limit_law.s_tol},
                    {"x", c.limit_law.x},                       {"psi_s_samples", c.limit_law.psi_s_samples},
                    {"psi_grid", c.limit_law.psi_grid},         {"chi_n", c.limit_law.chi_n},
                    {"chi_replicas", c.limit_law.chi_replicas}, {"chi_ks", c.limit_law.chi_ks}};
  j["nonconvergence"] = {{"beta", c.nonconvergence.beta},         {"samples", c.nonconvergence.samples},
                         {"z_samples", c.nonconvergence.z_samples}, {"floor_ks", c.nonconvergence.floor_ks},
                         {"same_ks", c.nonconvergence.same_ks},     {"bootstrap", c.nonconvergence.bootstrap},
                         {"rho_blocks", c.nonconvergence.rho_blocks}};
  j["toy-iid"] = {{"beta", c.toy.beta},
                  {"alpha", c.toy.alpha},
                  {"k_min", c.toy.k_min},
                  {"k_max", c.toy.k_max},
                  {"replicas", c.toy.replicas},
                  {"sub_ks", c.toy.sub_ks},
                  {"off_ks", c.toy.off_ks},
                  {"compare_betas", c.toy.compare_betas},
                  {"variance_level", c.toy.variance_level},
                  {"variance_eps", c.toy.variance_eps}};
  return j.dump();
}

std::uint64_t config_hash(const ExperimentConfig& c) {
  // FNV-1a over the canonical form.
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : canonical_json(c)) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

void set_replicas(ExperimentConfig& c, const std::string& e, std::size_t r) {
  if (e == "scaling" || e == "trap-time") c.scaling.replicas = r;
  if (e == "trap-time") c.trap_time.excursions = r;
  if (e == "subsequence") c.subsequence.replicas = r;
  if (e == "nonconvergence") c.nonconvergence.samples = r;
  if (e == "w-law") c.w_law.replicas = r;
  if (e == "limit-law") c.limit_law.chi_replicas = r;
  if (e == "toy-iid") c.toy.replicas = r;
}

}  // namespace gwrw::harness
