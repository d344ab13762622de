#include "thermolab/cli/config.hpp"

#include <cmath>
#include <limits>

#include "thermolab/curie_weiss.hpp"
#include "thermolab/errors.hpp"

namespace thermolab::cli {

namespace {

std::string where(const toml::Value& v) {
  return v.line == 0 ? std::string("override") : "line " + std::to_string(v.line);
}

[[noreturn]] void bad(const toml::Value& v, const std::string& key, const std::string& msg) {
  throw Error(ErrorKind::parse, where(v) + ": field '" + key + "' " + msg);
}

[[noreturn]] void bad_field(const std::string& key, const std::string& msg) {
  throw Error(ErrorKind::parse, "field '" + key + "' " + msg);
}

double as_double(const toml::Value& v, const std::string& key) {
  if (const auto* i = std::get_if<std::int64_t>(&v.data)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&v.data)) return *d;
  bad(v, key, std::string("expects a number, got ") + v.type_name());
}

std::uint64_t as_count(const toml::Value& v, const std::string& key) {
  const auto* i = std::get_if<std::int64_t>(&v.data);
  if (!i || *i < 0) bad(v, key, std::string("expects a non-negative integer, got ") + v.type_name());
  return static_cast<std::uint64_t>(*i);
}

class Reader {
 public:
  explicit Reader(const toml::Document& doc) : doc_(doc), used_(doc.entries().size(), false) {}

  const toml::Value* get(const std::string& key) {
    const auto& e = doc_.entries();
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (e[i].key == key) {
        used_[i] = true;
        return &e[i].value;
      }
    }
    return nullptr;
  }

  void read(const std::string& key, double& out) {
    if (const auto* v = get(key)) {
      out = as_double(*v, key);
      if (!std::isfinite(out)) bad(*v, key, "must be finite");
    }
  }
  void read(const std::string& key, std::optional<double>& out) {
    if (get(key)) {
      double d = 0.0;
      read(key, d);
      out = d;
    }
  }
  void read(const std::string& key, std::size_t& out) {
    if (const auto* v = get(key)) out = static_cast<std::size_t>(as_count(*v, key));
  }
  void read_seed(const std::string& key, std::uint64_t& out) {
    if (const auto* v = get(key)) {
      if (const auto* s = std::get_if<std::string>(&v->data)) {
        // seeds above 2^63 may be given as decimal strings
        try {
          std::size_t pos = 0;
          out = std::stoull(*s, &pos);
          if (pos != s->size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
          bad(*v, key, "expects an unsigned 64-bit integer");
        }
        return;
      }
      out = as_count(*v, key);
    }
  }
  void read(const std::string& key, bool& out) {
    if (const auto* v = get(key)) {
      const auto* b = std::get_if<bool>(&v->data);
      if (!b) bad(*v, key, std::string("expects a boolean, got ") + v->type_name());
      out = *b;
    }
  }
  void read(const std::string& key, std::string& out) {
    if (const auto* v = get(key)) {
      const auto* s = std::get_if<std::string>(&v->data);
      if (!s) bad(*v, key, std::string("expects a string, got ") + v->type_name());
      out = *s;
    }
  }
  void read(const std::string& key, std::vector<double>& out) {
    if (const auto* v = get(key)) {
      const auto& arr = array(*v, key);
      out.clear();
      for (const auto& x : arr) out.push_back(as_double(x, key));
    }
  }
  void read(const std::string& key, std::vector<std::size_t>& out) {
    if (const auto* v = get(key)) {
      const auto& arr = array(*v, key);
      out.clear();
      for (const auto& x : arr) out.push_back(static_cast<std::size_t>(as_count(x, key)));
    }
  }
  void read(const std::string& key, std::vector<std::vector<std::size_t>>& out) {
    if (const auto* v = get(key)) {
      const auto& arr = array(*v, key);
      out.clear();
      for (const auto& row : arr) {
        std::vector<std::size_t> r;
        for (const auto& x : array(row, key)) r.push_back(static_cast<std::size_t>(as_count(x, key)));
        out.push_back(std::move(r));
      }
    }
  }

  void finish() const {
    const auto& e = doc_.entries();
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (!used_[i]) bad(e[i].value, e[i].key, "is not a known setting");
    }
  }

 private:
  static const toml::Array& array(const toml::Value& v, const std::string& key) {
    const auto* a = std::get_if<toml::Array>(&v.data);
    if (!a) bad(v, key, std::string("expects an array, got ") + v.type_name());
    return *a;
  }

  const toml::Document& doc_;
  std::vector<bool> used_;
};

void require(bool ok, const std::string& key, const std::string& msg) {
  if (!ok) bad_field(key, msg);
}

}  // namespace

ExperimentConfig load_config(const toml::Document& doc) {
  ExperimentConfig c;
  Reader r(doc);

  auto& p = c.potential;
  r.read("potential.kind", p.kind);
  r.read("potential.c", p.c);
  r.read("potential.coupling", p.coupling);
  r.read("potential.depth", p.table_depth);
  r.read("potential.table", p.table);
  r.read("potential.g", p.g);
  r.read("potential.epsilon", p.epsilon);
  r.read("potential.truncation", p.truncation);
  r.read("potential.beta", p.beta);
  r.read("potential.gamma", p.gamma);

  r.read("alphabet.k", c.alphabet.k);
  r.read("alphabet.labels", c.alphabet.labels);
  r.read("weights.values", c.weights.values);
  r.read("weights.normalized", c.weights.normalized);

  r.read("run.depth", c.run.depth);
  r.read("run.tol", c.run.tol);
  r.read("run.max_iter", c.run.max_iter);
  r.read_seed("run.seed", c.run.seed);
  r.read("run.threads", c.run.threads);
  r.read("run.out", c.run.out);

  r.read("spectral.require_simple", c.spectral.require_simple);
  r.read("spectral.residual_limit", c.spectral.residual_limit);

  r.read("conformal.tol", c.conformal.tol);
  r.read("conformal.event", c.conformal.event);
  r.read("conformal.expect_invariant", c.conformal.expect_invariant);

  auto& s = c.specification;
  r.read("specification.n_list", s.n_list);
  r.read("specification.event", s.event);
  r.read("specification.boundaries", s.boundaries);
  r.read("specification.event_depth", s.event_depth);
  r.read("specification.normalization_tol", s.normalization_tol);
  r.read("specification.consistency_n", s.consistency_n);
  r.read("specification.consistency_depth", s.consistency_depth);
  r.read("specification.consistency_tol", s.consistency_tol);
  r.read("specification.expect", s.expect);
  r.read("specification.persist_threshold", s.persist_threshold);

  auto& cw = c.curie_weiss;
  r.read("curie_weiss.betas", cw.betas);
  r.read("curie_weiss.horizon", cw.horizon);
  r.read("curie_weiss.count", cw.count);
  r.read("curie_weiss.mixture_t", cw.mixture_t);
  r.read("curie_weiss.classify", cw.classify);
  r.read("curie_weiss.marginal_depth", cw.marginal_depth);

  auto& f = c.fclt;
  r.read("fclt.horizon", f.horizon);
  r.read("fclt.replicas", f.replicas);
  r.read("fclt.t_grid", f.t_grid);
  r.read("fclt.observable", f.observable);
  r.read("fclt.phi", f.phi);
  r.read("fclt.normalize", f.normalize);
  r.read("fclt.poisson_n_max", f.poisson_n_max);
  r.read("fclt.poisson_tol", f.poisson_tol);
  r.read("fclt.variance_rel_tol", f.variance_rel_tol);
  r.read("fclt.trace", f.trace);

  auto& d = c.dyson;
  r.read("dyson.epsilons", d.epsilons);
  r.read("dyson.pairs", d.pairs);
  r.read("dyson.n_list", d.n_list);
  r.read("dyson.flatness_n", d.flatness_n);
  r.read("dyson.flatness_pairs", d.flatness_pairs);
  r.read("dyson.agree", d.agree);
  r.read("dyson.decay_depth", d.decay_depth);
  r.read("dyson.n_max", d.n_max);
  r.read("dyson.window", d.window);
  r.read("dyson.slack", d.slack);
  r.read("dyson.normalization_limit", d.normalization_limit);

  r.read("entropy.n_list", c.entropy.n_list);
  r.read("entropy.tol", c.entropy.tol);
  r.finish();

  // cross-field checks
  static const char* kinds[] = {"constant", "tabulated", "ising", "first_coordinate", "dyson",
                                "mean_field"};
  bool known = false;
  for (const char* k : kinds) known = known || p.kind == k;
  require(known, "potential.kind",
          "must be one of constant, tabulated, ising, first_coordinate, dyson, mean_field");
  require(c.alphabet.k >= 2, "alphabet.k", "must be >= 2");
  require(c.alphabet.labels.empty() || c.alphabet.labels.size() == c.alphabet.k, "alphabet.labels",
          "must have alphabet.k entries");
  require(c.weights.values.empty() || c.weights.values.size() == c.alphabet.k, "weights.values",
          "must have alphabet.k entries");
  require(c.run.depth >= 1, "run.depth", "must be >= 1");
  require(c.run.tol > 0.0, "run.tol", "must be > 0");
  if (p.kind == "tabulated") {
    require(!p.table.empty(), "potential.table", "is required for kind = \"tabulated\"");
  }
  if (p.kind == "first_coordinate") {
    require(p.g.size() == c.alphabet.k, "potential.g", "must have alphabet.k entries");
  }
  if (p.kind == "mean_field" || p.kind == "dyson") {
    require(c.alphabet.k == 2, "alphabet.k", "must be 2 for spin potentials");
  }
  require(s.expect == "none" || s.expect == "decay" || s.expect == "persist",
          "specification.expect", "must be none, decay or persist");
  require(!s.n_list.empty(), "specification.n_list", "must not be empty");
  require(f.observable == "x1" || f.observable == "table", "fclt.observable",
          "must be \"x1\" or \"table\"");
  require(f.horizon >= 1, "fclt.horizon", "must be >= 1");
  require(f.replicas >= 2, "fclt.replicas", "must be >= 2");
  require(cw.mixture_t >= 0.0 && cw.mixture_t <= 1.0, "curie_weiss.mixture_t", "must lie in [0, 1]");
  require(d.window.size() == 2 && d.window[0] >= 1 && d.window[0] < d.window[1], "dyson.window",
          "must be [lo, hi] with 1 <= lo < hi");
  return c;
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  toml::Document doc = path.empty() ? toml::Document{} : toml::parse_file(path);
  for (const auto& o : overrides) toml::apply_override(doc, o);
  return load_config(doc);
}

Alphabet ExperimentConfig::make_alphabet() const {
  if (!alphabet.labels.empty()) return Alphabet(alphabet.labels);
  if (alphabet.k == 2) return Alphabet::spins();
  std::vector<double> l(alphabet.k);
  for (std::size_t i = 0; i < l.size(); ++i) l[i] = static_cast<double>(i);
  return Alphabet(std::move(l));
}

AprioriWeights ExperimentConfig::make_weights() const {
  if (!weights.values.empty()) return AprioriWeights(weights.values, weights.normalized);
  return weights.normalized ? AprioriWeights::uniform(alphabet.k)
                            : AprioriWeights::counting(alphabet.k);
}

PotentialSpec ExperimentConfig::make_potential() const {
  const auto& p = potential;
  if (p.kind == "constant") return PotentialSpec::constant(p.c);
  if (p.kind == "tabulated") return PotentialSpec::tabulated(alphabet.k, p.table_depth, p.table);
  if (p.kind == "ising") return PotentialSpec::ising(make_alphabet(), p.coupling);
  if (p.kind == "first_coordinate") return PotentialSpec::first_coordinate(p.g);
  if (p.kind == "dyson") {
    return PotentialSpec::dyson(p.epsilon, p.truncation == 0 ? run.depth + 1 : p.truncation);
  }
  const double g = p.gamma ? *p.gamma : solve_magnetization(p.beta).roots.back();
  return PotentialSpec::mean_field(p.beta, g);
}

}  // namespace thermolab::cli
