#include "thermolab/cli/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>

#include <json.hpp>

#include "thermolab/cli/config.hpp"
#include "thermolab/conformal.hpp"
#include "thermolab/curie_weiss.hpp"
#include "thermolab/errors.hpp"
#include "thermolab/longrange.hpp"
#include "thermolab/markov_fclt.hpp"
#include "thermolab/transfer.hpp"

namespace thermolab::cli {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

// Shortest text that reads back to the same double.
std::string num(double x) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

std::string word_text(const Word& w) {
  std::string s;
  for (std::size_t i = 0; i < w.depth(); ++i) {
    if (i > 0) s += ':';
    s += std::to_string(w[i]);
  }
  return s.empty() ? "-" : s;
}

Word to_word(const std::vector<std::size_t>& v, std::size_t k, const char* field) {
  std::vector<Symbol> s;
  for (std::size_t x : v) {
    if (x >= k) throw Error(ErrorKind::parse, std::string("field '") + field + "' has a symbol >= alphabet.k");
    s.push_back(static_cast<Symbol>(x));
  }
  return Word(std::move(s));
}

class Csv {
 public:
  Csv(const fs::path& path, const std::vector<std::string>& header)
      : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw Error(ErrorKind::parse, "cannot write '" + path.string() + "'");
    row(header);
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i > 0) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

json fit_json(const LinearFit& f) {
  return {{"slope", f.slope}, {"intercept", f.intercept}, {"r_squared", f.r_squared},
          {"points", f.points}};
}

json estimate_json(const McEstimate& e) {
  return {{"estimate", e.estimate}, {"se", e.se},       {"target", e.target},
          {"z", e.z},               {"bias_bound", e.bias_bound}, {"pass", e.pass}};
}

json config_json(const ExperimentConfig& c, const std::string& out_dir) {
  json j;
  const auto& p = c.potential;
  json pot{{"kind", p.kind}};
  if (p.kind == "constant") pot["c"] = p.c;
  if (p.kind == "ising") pot["coupling"] = p.coupling;
  if (p.kind == "tabulated") {
    pot["depth"] = p.table_depth;
    pot["table"] = p.table;
  }
  if (p.kind == "first_coordinate") pot["g"] = p.g;
  if (p.kind == "dyson") {
    pot["epsilon"] = p.epsilon;
    pot["truncation"] = p.truncation == 0 ? c.run.depth + 1 : p.truncation;
  }
  if (p.kind == "mean_field") {
    pot["beta"] = p.beta;
    pot["gamma"] = p.gamma ? *p.gamma : solve_magnetization(p.beta).roots.back();
  }
  j["potential"] = pot;
  const Alphabet a = c.make_alphabet();
  const AprioriWeights w = c.make_weights();
  j["alphabet"] = {{"k", c.alphabet.k},
                   {"labels", std::vector<double>(a.labels().begin(), a.labels().end())}};
  j["weights"] = {{"values", std::vector<double>(w.values().begin(), w.values().end())},
                  {"normalized", w.normalized()}};
  j["run"] = {{"depth", c.run.depth}, {"tol", c.run.tol},         {"max_iter", c.run.max_iter},
              {"seed", c.run.seed},   {"threads", c.run.threads}, {"out", out_dir}};
  j["spectral"] = {{"require_simple", c.spectral.require_simple},
                   {"residual_limit", c.spectral.residual_limit}};
  j["conformal"] = {{"tol", c.conformal.tol},
                    {"event", c.conformal.event},
                    {"expect_invariant", c.conformal.expect_invariant}};
  const auto& s = c.specification;
  j["specification"] = {{"n_list", s.n_list},
                        {"event", s.event},
                        {"boundaries", s.boundaries},
                        {"event_depth", s.event_depth},
                        {"normalization_tol", s.normalization_tol},
                        {"consistency_n", s.consistency_n},
                        {"consistency_depth", s.consistency_depth == 0 ? c.run.depth : s.consistency_depth},
                        {"consistency_tol", s.consistency_tol},
                        {"expect", s.expect},
                        {"persist_threshold", s.persist_threshold}};
  const auto& cw = c.curie_weiss;
  j["curie_weiss"] = {{"betas", cw.betas},         {"horizon", cw.horizon},
                      {"count", cw.count},         {"mixture_t", cw.mixture_t},
                      {"classify", cw.classify},   {"marginal_depth", cw.marginal_depth}};
  const auto& f = c.fclt;
  j["fclt"] = {{"horizon", f.horizon},
               {"replicas", f.replicas},
               {"t_grid", f.t_grid},
               {"observable", f.observable},
               {"phi", f.phi},
               {"normalize", f.normalize},
               {"poisson_n_max", f.poisson_n_max},
               {"poisson_tol", f.poisson_tol},
               {"variance_rel_tol", f.variance_rel_tol},
               {"trace", f.trace}};
  const auto& d = c.dyson;
  j["dyson"] = {{"epsilons", d.epsilons},
                {"pairs", d.pairs},
                {"n_list", d.n_list},
                {"flatness_n", d.flatness_n},
                {"flatness_pairs", d.flatness_pairs},
                {"agree", d.agree},
                {"decay_depth", d.decay_depth},
                {"n_max", d.n_max},
                {"window", d.window},
                {"slack", d.slack},
                {"normalization_limit", d.normalization_limit}};
  j["entropy"] = {{"n_list", c.entropy.n_list}, {"tol", c.entropy.tol}};
  return j;
}

// What a subcommand hands back to the driver.
struct Outcome {
  json results = json::object();
  json assertions = json::object();  // name -> bool, decides the exit code
  json advisory = json::object();    // reported only
  std::vector<std::string> warnings;
  int runtime_failure = 0;           // kRuntime when a solver did not converge
};

struct Context {
  const ExperimentConfig& cfg;
  fs::path dir;
  Alphabet alphabet;
  AprioriWeights weights;
};

Outcome run_spectral(const Context& cx) {
  const auto& c = cx.cfg;
  Outcome o;
  const auto f = c.make_potential();
  const auto L = build_truncated_operator(f, cx.alphabet, cx.weights, c.run.depth);
  const auto s = power_iterate(L, c.run.tol, c.run.max_iter);
  double min_h = INFINITY, max_h = 0.0, min_nu = INFINITY;
  for (double v : s.h.values()) {
    min_h = std::min(min_h, v);
    max_h = std::max(max_h, v);
  }
  for (double v : s.nu.masses()) min_nu = std::min(min_nu, v);
  o.results["spectral"] = {{"depth", c.run.depth},
                           {"states", L.dim()},
                           {"rho", s.rho},
                           {"log_rho", std::log(s.rho)},
                           {"rho_lower", s.rho_lower},
                           {"rho_upper", s.rho_upper},
                           {"tail_bound", s.tail_bound},
                           {"iterations", s.iterations},
                           {"converged", s.converged},
                           {"tol", c.run.tol},
                           {"right_residual", s.right_residual},
                           {"left_residual", s.left_residual},
                           {"min_h", min_h},
                           {"max_h", max_h},
                           {"min_nu", min_nu},
                           {"vectors", "spectral_vectors.csv"}};
  Csv csv(cx.dir / "spectral_vectors.csv", {"index", "word", "h", "nu"});
  for (std::size_t i = 0; i < L.dim(); ++i) {
    csv.row({std::to_string(i), word_text(decode_word(i, c.run.depth, cx.alphabet.size())),
             num(s.h[i]), num(s.nu[i])});
  }
  o.assertions["converged"] = s.converged;
  if (!s.converged) {
    o.runtime_failure = kRuntime;
    return o;
  }
  const auto m = leading_multiplicity(L, s);
  o.results["multiplicity"] = {{"multiplicity", m.multiplicity},
                               {"candidates", m.candidates},
                               {"residuals", m.residuals},
                               {"second_modulus", m.second_modulus},
                               {"gap", m.gap}};
  o.assertions["residuals"] =
      s.right_residual < c.spectral.residual_limit && s.left_residual < c.spectral.residual_limit;
  o.assertions["positive_h"] = min_h > 0.0;
  o.assertions["positive_nu"] = min_nu > 0.0;
  if (c.spectral.require_simple) o.assertions["simple"] = m.multiplicity == 1;
  return o;
}

Outcome run_conformal(const Context& cx) {
  const auto& c = cx.cfg;
  Outcome o;
  const auto f = c.make_potential();
  const std::size_t D = c.run.depth;
  const auto L = build_truncated_operator(f, cx.alphabet, cx.weights, D);
  const auto s = power_iterate(L, c.run.tol, c.run.max_iter);
  o.assertions["converged"] = s.converged;
  if (!s.converged) {
    o.runtime_failure = kRuntime;
    return o;
  }
  Csv csv(cx.dir / "support.csv", {"depth", "min_mass", "base", "ratio", "worst", "pass"});
  bool support_ok = true;
  double worst_ratio = INFINITY;
  for (std::size_t n = 1; n <= D; ++n) {
    const auto r = check_full_support(s.nu, f, cx.alphabet, cx.weights, s.rho, n, c.conformal.tol);
    csv.row({std::to_string(n), num(r.min_mass), num(r.base), num(r.ratio), word_text(r.worst),
             r.pass ? "1" : "0"});
    support_ok = support_ok && r.pass;
    worst_ratio = std::min(worst_ratio, r.ratio);
  }
  o.results["support"] = {{"depths", D}, {"worst_ratio", worst_ratio}, {"tol", c.conformal.tol},
                          {"table", "support.csv"}};
  const auto h1 = check_h1(s.nu, cx.weights, f, cx.alphabet, s.rho, c.conformal.tol);
  o.results["h1"] = {{"max_ratio", h1.max_ratio},
                     {"bound", h1.bound},
                     {"worst", word_text(h1.worst)},
                     {"untestable", h1.untestable},
                     {"tol", c.conformal.tol}};
  const Word ev = to_word(c.conformal.event, cx.alphabet.size(), "conformal.event");
  const auto ind = CylinderFunction::indicator(cx.alphabet.size(), D, ev);
  const auto cm = conditional_conformal(s.nu, ind, L, s.rho, c.conformal.tol);
  o.results["conditional"] = {{"event", word_text(ev)},
                              {"mass", cm.mass},
                              {"residual", cm.residual},
                              {"invariant", cm.invariant}};
  o.results["rho"] = s.rho;
  o.results["tail_bound"] = s.tail_bound;
  o.assertions["full_support"] = support_ok;
  o.assertions["h1"] = h1.pass;
  if (c.conformal.expect_invariant) o.assertions["conditional_invariant"] = cm.invariant;
  return o;
}

Outcome run_specification(const Context& cx) {
  const auto& c = cx.cfg;
  const auto& sc = c.specification;
  Outcome o;
  const auto f = c.make_potential();
  const std::size_t k = cx.alphabet.size();
  std::vector<Word> boundaries;
  for (const auto& b : sc.boundaries) {
    boundaries.push_back(to_word(b, k, "specification.boundaries"));
    if (boundaries.back().depth() == 0) {
      throw Error(ErrorKind::parse, "field 'specification.boundaries' has an empty boundary");
    }
  }
  const Word event = to_word(sc.event, k, "specification.event");

  Csv kcsv(cx.dir / "kernel.csv", {"n", "boundary_id", "event", "value", "tail_lower", "tail_upper"});
  double worst_norm = 0.0;
  for (std::size_t n : sc.n_list) {
    const std::size_t ed = std::min(std::max<std::size_t>(sc.event_depth, 1), n);
    for (std::size_t b = 0; b < boundaries.size(); ++b) {
      const auto dist = kernel_distribution(f, cx.alphabet, cx.weights, n, ed, boundaries[b]);
      CompensatedSum total;
      for (std::size_t e = 0; e < dist.size(); ++e) {
        kcsv.row({std::to_string(n), std::to_string(b), word_text(decode_word(e, ed, k)),
                  num(dist[e].value), num(dist[e].lower), num(dist[e].upper)});
        total += dist[e].value;
      }
      worst_norm = std::max(worst_norm, std::abs(total.value() - 1.0));
    }
  }
  o.results["kernel"] = {{"table", "kernel.csv"},
                         {"normalization_error", worst_norm},
                         {"tol", sc.normalization_tol},
                         {"tail_bound", f.tail_bound()}};
  o.assertions["kernel_normalization"] = worst_norm <= sc.normalization_tol;

  const auto scan = boundary_sensitivity_scan(f, cx.alphabet, cx.weights, event, boundaries, sc.n_list);
  Csv scsv(cx.dir / "sensitivity.csv",
           {"n", "boundary_id", "value", "tail_lower", "tail_upper", "discrepancy"});
  for (std::size_t i = 0; i < scan.n_list.size(); ++i) {
    for (std::size_t b = 0; b < scan.values[i].size(); ++b) {
      const auto& v = scan.values[i][b];
      scsv.row({std::to_string(scan.n_list[i]), std::to_string(b), num(v.value), num(v.lower),
                num(v.upper), num(scan.discrepancy[i])});
    }
  }
  double min_disc = INFINITY;
  for (double d : scan.discrepancy) min_disc = std::min(min_disc, d);
  json sens{{"table", "sensitivity.csv"},
            {"event", word_text(event)},
            {"discrepancy", scan.discrepancy},
            {"final_discrepancy", scan.final_discrepancy},
            {"monotone_decay", scan.monotone_decay}};
  if (sc.expect == "decay") o.assertions["sensitivity_decay"] = scan.monotone_decay;
  if (sc.expect == "persist") {
    double thr = sc.persist_threshold;
    if (thr == 0.0) {
      if (const auto* mf = std::get_if<MeanFieldPotential>(&f.kind())) {
        thr = std::tanh(mf->beta * std::abs(mf->gamma)) / 2.0;
      }
    }
    sens["persist_threshold"] = thr;
    o.assertions["sensitivity_persists"] = min_disc > thr;
  }
  o.results["sensitivity"] = sens;

  if (!sc.consistency_n.empty()) {
    const std::size_t Dc = sc.consistency_depth == 0 ? c.run.depth : sc.consistency_depth;
    const auto L = build_truncated_operator(f, cx.alphabet, cx.weights, Dc);
    const auto s = power_iterate(L, c.run.tol, c.run.max_iter);
    if (!s.converged) {
      o.assertions["converged"] = false;
      o.runtime_failure = kRuntime;
      return o;
    }
    json rows = json::array();
    double worst = 0.0;
    for (std::size_t n : sc.consistency_n) {
      const std::size_t ed = std::min(std::max<std::size_t>(sc.event_depth, 1), n);
      const auto r = kernel_consistency(f, cx.alphabet, cx.weights, s.nu.normalized(), n, ed);
      rows.push_back({{"n", n}, {"event_depth", ed}, {"max_error", r.max_error}, {"events", r.events}});
      worst = std::max(worst, r.max_error);
    }
    o.results["consistency"] = {{"depth", Dc}, {"rows", rows}, {"max_error", worst},
                                {"tol", sc.consistency_tol}};
    o.assertions["kernel_consistency"] = worst <= sc.consistency_tol;
  }
  return o;
}

Outcome run_curie_weiss(const Context& cx) {
  const auto& c = cx.cfg;
  const auto& cw = c.curie_weiss;
  Outcome o;
  McBudget budget;
  budget.horizon = cw.horizon;
  budget.count = cw.count;
  budget.seed = c.run.seed;
  budget.threads = c.run.threads;
  Csv csv(cx.dir / "curie_weiss.csv",
          {"beta", "gamma", "eigenvalue", "plus_mass", "estimate_plus", "se_plus", "estimate_minus",
           "se_minus", "estimate_total", "se_total"});
  json per_beta = json::array();
  for (double beta : cw.betas) {
    const std::string tag = "beta=" + num(beta) + "/";
    const auto sol = solve_magnetization(beta);
    const auto sd = cw_spectral_data(beta);
    const auto rep = verify_generalized_conformal(beta, budget);
    csv.row({num(beta), num(sd.gamma), num(sd.eigenvalue), num(sd.plus_mass),
             num(rep.plus.estimate), num(rep.plus.se), num(rep.minus.estimate), num(rep.minus.se),
             num(rep.total.estimate), num(rep.total.se)});
    json jb{{"beta", beta},
            {"roots", sol.roots},
            {"regime", to_string(sol.regime)},
            {"root_residual", sol.residual},
            {"gamma", sd.gamma},
            {"eigenvalue", sd.eigenvalue},
            {"plus_mass", sd.plus_mass},
            {"minus_mass", sd.minus_mass},
            {"horizon", rep.horizon},
            {"count", rep.count},
            {"plus", estimate_json(rep.plus)},
            {"minus", estimate_json(rep.minus)},
            {"total", estimate_json(rep.total)},
            {"mass_identity", rep.mass_identity},
            {"underpowered", rep.underpowered}};
    if (rep.underpowered) o.warnings.push_back(tag + "count below 1000, 4 SE rule in force");
    o.assertions[tag + "root"] = sol.residual < 1e-12;
    o.assertions[tag + "conformal"] = rep.pass;
    if (cw.classify) {
      const auto mags = sample_mixture(beta, cw.mixture_t, budget);
      const auto cls = classify_phase(mags, beta, cw.horizon);
      const bool super = sol.regime == Regime::supercritical;
      const std::size_t expect =
          super && cw.mixture_t > 0.0 && cw.mixture_t < 1.0 ? 2 : 1;
      json classes = json::array();
      bool fractions = true, ratios = true;
      for (const auto& pc : cls.classes) {
        double target = 1.0;
        if (super) target = pc.phase == Phase::plus ? cw.mixture_t : 1.0 - cw.mixture_t;
        const bool fok = std::abs(pc.fraction - target) <= 3.0 * pc.fraction_se + 1e-15;
        fractions = fractions && fok;
        ratios = ratios && pc.ratio.pass;
        classes.push_back({{"phase", to_string(pc.phase)},
                           {"count", pc.count},
                           {"fraction", pc.fraction},
                           {"fraction_se", pc.fraction_se},
                           {"fraction_target", target},
                           {"ratio", estimate_json(pc.ratio)}});
      }
      jb["classification"] = {{"mixture_t", cw.mixture_t},
                              {"threshold", cls.threshold},
                              {"undetermined", cls.undetermined},
                              {"undetermined_fraction", cls.undetermined_fraction},
                              {"dimension", cls.dimension},
                              {"expected_dimension", expect},
                              {"inconclusive", cls.inconclusive},
                              {"classes", classes}};
      o.assertions[tag + "dimension"] = cls.dimension == expect && !cls.inconclusive;
      o.assertions[tag + "class_fractions"] = fractions;
      o.assertions[tag + "class_ratios"] = ratios;
      if (super && cw.marginal_depth > 0) {
        const auto mc = conditional_class_check(beta, cw.mixture_t, cw.marginal_depth, budget);
        jb["class_marginal"] = {{"depth", mc.depth},
                                {"in_class", mc.in_class},
                                {"max_z", mc.max_z},
                                {"mc_residual", mc.mc_residual},
                                {"exact_residual", mc.exact_residual}};
        o.assertions[tag + "class_marginal"] = mc.pass;
      }
    }
    per_beta.push_back(jb);
  }
  o.results["table"] = "curie_weiss.csv";
  o.results["betas"] = per_beta;
  return o;
}

Outcome run_fclt(const Context& cx) {
  const auto& c = cx.cfg;
  const auto& fc = c.fclt;
  Outcome o;
  const std::size_t D = c.run.depth;
  PotentialSpec f = c.make_potential();
  double norm_residual = 0.0;
  if (fc.normalize) {
    const auto np = normalize_potential(f, cx.alphabet, cx.weights, D, c.run.tol, c.run.max_iter);
    f = np.potential;
    norm_residual = np.residual;
  }
  const auto chain = make_chain(f, cx.alphabet, cx.weights, D);
  CylinderFunction phi = fc.observable == "x1"
                             ? CylinderFunction::coordinate(cx.alphabet, D)
                             : CylinderFunction(cx.alphabet.size(), D, fc.phi);
  const auto sol = solve_poisson(chain.op(), chain.stationary(), phi, fc.poisson_n_max, fc.poisson_tol);
  const auto var = asymptotic_variance(chain.op(), chain.stationary(), sol, phi);
  o.results["chain"] = {{"depth", D},
                        {"normalized_here", fc.normalize},
                        {"normalization_residual", std::max(norm_residual, chain.normalization_residual())}};
  o.results["poisson"] = {{"terms", sol.terms},
                          {"phi_mean", sol.phi_mean},
                          {"tail_bound", sol.tail_bound},
                          {"residual", sol.residual},
                          {"rate", sol.rate},
                          {"converged", sol.converged},
                          {"tol", fc.poisson_tol}};
  o.results["variance"] = {{"poisson", var.poisson},
                           {"green_kubo", var.green_kubo},
                           {"literal", var.literal},
                           {"gk_terms", var.gk_terms},
                           {"tail", var.tail},
                           {"agree", var.agree},
                           {"degenerate", var.degenerate}};
  o.assertions["poisson_converged"] = sol.converged;
  o.assertions["variance_agree"] = var.agree;
  o.assertions["nondegenerate"] = !var.degenerate;
  if (var.degenerate) return o;

  FcltOptions opts;
  opts.horizon = fc.horizon;
  opts.replicas = fc.replicas;
  opts.t_grid = fc.t_grid;
  opts.seed = c.run.seed;
  opts.threads = c.run.threads;
  std::ofstream trace;
  if (!fc.trace.empty()) {
    trace.open(cx.dir / fc.trace, std::ios::binary | std::ios::trunc);
    if (!trace) throw Error(ErrorKind::parse, "cannot write trace '" + fc.trace + "'");
    opts.trace = &trace;
  }
  const auto rep = fclt_experiment(chain, phi, var.poisson, opts);
  {
    Csv csv(cx.dir / "fclt_samples.csv", {"replica", "y1"});
    for (std::size_t r = 0; r < rep.y1.size(); ++r) csv.row({std::to_string(r), num(rep.y1[r])});
  }
  {
    Csv csv(cx.dir / "fclt_variance.csv", {"steps", "var_over_steps", "se", "sigma2"});
    for (const auto& p : rep.variance_curve) {
      csv.row({std::to_string(p.steps), num(p.value), num(p.se), num(var.poisson)});
    }
  }
  json cov = json::array();
  for (const auto& cc : rep.covariance) {
    cov.push_back({{"s", cc.s}, {"t", cc.t}, {"value", cc.value}, {"se", cc.se},
                   {"target", cc.target}, {"pass", cc.pass}});
  }
  json curve = json::array();
  for (const auto& p : rep.variance_curve) {
    curve.push_back({{"steps", p.steps}, {"value", p.value}, {"se", p.se}});
  }
  o.results["fclt"] = {{"horizon", rep.horizon},
                       {"replicas", rep.replicas},
                       {"sigma2", rep.sigma2},
                       {"ks_statistic", rep.ks_statistic},
                       {"ks_critical", rep.ks_critical},
                       {"ks_pvalue", rep.ks_pvalue},
                       {"var_y1", rep.var_y1},
                       {"var_se", rep.var_se},
                       {"covariance", cov},
                       {"variance_curve", curve},
                       {"underpowered", rep.underpowered},
                       {"samples", "fclt_samples.csv"},
                       {"trace", fc.trace}};
  json& target = rep.underpowered ? o.advisory : o.assertions;
  if (rep.underpowered) {
    o.warnings.push_back("underpowered: " + std::to_string(rep.replicas) +
                         " replicas, statistical checks reported but not asserted");
  }
  target["ks"] = rep.ks_pass;
  target["variance_y1"] = rep.var_pass;
  target["covariance"] = rep.cov_pass;
  if (fc.variance_rel_tol > 0.0 && !rep.variance_curve.empty()) {
    const double v = rep.variance_curve.back().value;
    target["variance_growth"] = std::abs(v - var.poisson) <= fc.variance_rel_tol * var.poisson;
  }
  return o;
}

Outcome run_dyson(const Context& cx) {
  const auto& c = cx.cfg;
  const auto& dc = c.dyson;
  Outcome o;
  Csv mcsv(cx.dir / "dyson_modulus.csv",
           {"epsilon", "agree", "worst_difference", "worst_ratio", "tail", "bound"});
  Csv fcsv(cx.dir / "dyson_flatness.csv",
           {"epsilon", "n", "agree", "constant", "bound", "worst_discrepancy", "worst_ratio"});
  Csv dcsv(cx.dir / "dyson_decay.csv", {"epsilon", "n", "norm", "bound"});
  json per = json::array();
  for (double eps : dc.epsilons) {
    const std::string tag = "epsilon=" + num(eps) + "/";
    json je{{"epsilon", eps}};
    const auto mod = modulus_check(eps, dc.pairs, dc.n_list, c.run.seed, c.run.threads);
    for (const auto& r : mod.rows) {
      mcsv.row({num(eps), std::to_string(r.agree), num(r.worst_difference), num(r.worst_ratio),
                num(r.tail), num(mod.bound)});
    }
    je["modulus"] = {{"pairs", mod.pairs}, {"length", mod.length}, {"worst_ratio", mod.worst_ratio},
                     {"bound", mod.bound}};
    o.assertions[tag + "modulus"] = mod.pass;
    if (eps > 1.0) {
      const auto fl = birkhoff_flatness_check(eps, dc.flatness_n, dc.flatness_pairs, c.run.seed,
                                              dc.agree, c.run.threads);
      for (const auto& r : fl.rows) {
        fcsv.row({num(eps), std::to_string(fl.n), std::to_string(r.agree), num(fl.constant),
                  num(r.bound), num(r.worst_discrepancy), num(r.worst_ratio)});
      }
      je["flatness"] = {{"n", fl.n}, {"pairs", fl.pairs}, {"constant", fl.constant},
                        {"worst_ratio", fl.worst_ratio}};
      o.assertions[tag + "flatness"] = fl.pass;
    } else {
      je["flatness"] = "skipped: the flatness bound needs epsilon > 1";
    }
    const auto dp = dyson_decay_profile(eps, dc.decay_depth, dc.n_max, std::nullopt,
                                        FitWindow{dc.window[0], dc.window[1]}, dc.slack, c.run.tol);
    const std::size_t lo = dp.window.lo;
    for (std::size_t n = 1; n < dp.norms.size(); ++n) {
      const double ref = lo < dp.norms.size()
                             ? dp.norms[lo] * std::pow(double(lo) / double(n), eps - 1.0)
                             : 0.0;
      dcsv.row({num(eps), std::to_string(n), num(dp.norms[n]), num(ref)});
    }
    je["decay"] = {{"depth", dp.depth},
                   {"truncation", dp.truncation},
                   {"truncation_tail", dp.truncation_tail},
                   {"normalization_residual", dp.normalization_residual},
                   {"window", {dp.window.lo, dp.window.hi}},
                   {"slope", dp.slope},
                   {"fit", fit_json(dp.fit)},
                   {"target_slope", dp.target_slope},
                   {"slack", dp.slack},
                   {"degenerate", dp.degenerate},
                   {"note", "fit window capped at the truncation depth: the truncated operator has "
                            "a spectral gap, so polynomial decay is only a transient there"}};
    o.assertions[tag + "normalization"] = dp.normalization_residual < dc.normalization_limit;
    o.assertions[tag + "decay"] = dp.pass;
    per.push_back(je);
  }
  o.results["tables"] = {"dyson_modulus.csv", "dyson_flatness.csv", "dyson_decay.csv"};
  o.results["epsilons"] = per;
  return o;
}

Outcome run_entropy(const Context& cx) {
  const auto& c = cx.cfg;
  Outcome o;
  const std::size_t D = c.run.depth;
  std::vector<std::size_t> ns = c.entropy.n_list;
  if (ns.empty()) {
    for (std::size_t n = 1; n <= D; ++n) ns.push_back(n);
  }
  // p^n must be a probability for the reference check
  std::vector<double> pw(cx.weights.values().begin(), cx.weights.values().end());
  if (!cx.weights.normalized()) {
    const double t = cx.weights.total();
    for (double& x : pw) x /= t;
  }
  const AprioriWeights p(pw, true);
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  std::vector<CylinderMeasure> marginals;
  for (std::size_t n : ns) marginals.push_back(CylinderMeasure::product(p.values(), n));
  const auto er = relative_entropy_rate(marginals, p);
  bool zero = er.rate == 0.0;
  for (double h : er.relative_entropy) zero = zero && h == 0.0;
  o.results["product_measure"] = {{"n", er.n},
                                  {"relative_entropy", er.relative_entropy},
                                  {"rate", er.rate},
                                  {"fit", fit_json(er.fit)}};
  o.assertions["product_entropy_zero"] = zero;

  const auto f = c.make_potential();
  const auto pc = pressure_check(f, cx.alphabet, cx.weights, D, c.entropy.tol);
  o.results["pressure"] = {{"depth", D},
                           {"log_rho", pc.log_rho},
                           {"entropy", pc.entropy},
                           {"entropy_slope", pc.entropy_slope},
                           {"energy", pc.energy},
                           {"defect", pc.defect},
                           {"invariance_residual", pc.invariance_residual},
                           {"tol", c.entropy.tol},
                           {"tail_bound", f.tail_bound()}};
  o.assertions["pressure_identity"] = pc.pass;
  return o;
}

const std::map<std::string, std::function<Outcome(const Context&)>>& table() {
  static const std::map<std::string, std::function<Outcome(const Context&)>> t{
      {"spectral", run_spectral},   {"conformal", run_conformal},
      {"specification", run_specification}, {"curie-weiss", run_curie_weiss},
      {"fclt", run_fclt},           {"dyson", run_dyson},
      {"entropy", run_entropy}};
  return t;
}

int exit_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::capacity:
    case ErrorKind::not_converged:
    case ErrorKind::stability:
      return kRuntime;
    default:
      return kInput;
  }
}

void diagnostic(std::ostream& err, const json& j) { err << j.dump() << '\n'; }

}  // namespace

const std::vector<std::string>& subcommand_names() {
  static const std::vector<std::string> names{"spectral", "conformal", "specification",
                                              "curie-weiss", "fclt", "dyson", "entropy"};
  return names;
}

std::string resolve_out_dir(const std::optional<std::string>& flag, const std::string& configured) {
  if (flag && !flag->empty()) return *flag;
  if (!configured.empty()) return configured;
  if (const char* env = std::getenv("THERMOLAB_OUT"); env && *env) return env;
  return ".";
}

int run_subcommand(const std::string& name, const CliOptions& opts, std::ostream& log,
                   std::ostream& err) {
  const auto it = table().find(name);
  if (it == table().end()) {
    diagnostic(err, {{"status", "error"}, {"kind", "parse"},
                     {"message", "unknown subcommand '" + name + "'"}, {"exit", int(kInput)}});
    return kInput;
  }
  try {
    std::vector<std::string> sets = opts.overrides;
    if (opts.seed) sets.push_back("run.seed=\"" + std::to_string(*opts.seed) + "\"");
    if (opts.threads) sets.push_back("run.threads=" + std::to_string(*opts.threads));
    const ExperimentConfig cfg = load_config(opts.config_path, sets);
    const std::string out = resolve_out_dir(opts.out, cfg.run.out);
    fs::create_directories(out);
    const Context cx{cfg, fs::path(out), cfg.make_alphabet(), cfg.make_weights()};

    Outcome o = it->second(cx);
    bool pass = o.runtime_failure == 0;
    std::vector<std::string> failed;
    for (const auto& [k, v] : o.assertions.items()) {
      if (!v.get<bool>()) {
        pass = false;
        failed.push_back(k);
      }
    }
    json doc;
    doc["subcommand"] = name;
    doc["config"] = config_json(cfg, out);
    for (const auto& [k, v] : o.results.items()) doc[k] = v;
    doc["assertions"] = o.assertions;
    if (!o.advisory.empty()) doc["advisory"] = o.advisory;
    doc["warnings"] = o.warnings;
    doc["pass"] = pass;
    const std::string file = (fs::path(out) / (name == "curie-weiss" ? "curie_weiss.json" : name + ".json")).string();
    {
      std::ofstream js(file, std::ios::binary | std::ios::trunc);
      if (!js) throw Error(ErrorKind::parse, "cannot write '" + file + "'");
      js << doc.dump(2) << '\n';
    }
    for (const auto& w : o.warnings) diagnostic(err, {{"status", "warning"}, {"message", w}});
    if (o.runtime_failure != 0) {
      diagnostic(err, {{"status", "error"}, {"kind", "not-converged"},
                       {"message", name + ": solver did not converge"}, {"exit", o.runtime_failure}});
      log << name << ": ERROR " << file << '\n';
      return o.runtime_failure;
    }
    if (!pass) {
      diagnostic(err, {{"status", "fail"}, {"failed", failed}, {"exit", int(kAssertion)}});
      log << name << ": FAIL " << file << '\n';
      return kAssertion;
    }
    log << name << ": PASS " << file << '\n';
    return kPass;
  } catch (const Error& e) {
    const int code = exit_for(e.kind());
    diagnostic(err, {{"status", "error"}, {"kind", to_string(e.kind())}, {"message", e.what()},
                     {"exit", code}});
    return code;
  } catch (const std::exception& e) {
    diagnostic(err, {{"status", "error"}, {"kind", "internal"}, {"message", e.what()},
                     {"exit", int(kRuntime)}});
    return kRuntime;
  }
}

}  // namespace thermolab::cli
