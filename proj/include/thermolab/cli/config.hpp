#pragma once

// Typed experiment configuration. Every field has a default; a file only
// lists what it changes. Unknown keys and type mismatches are parse errors
// naming the line and the dotted field.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "thermolab/cli/toml.hpp"
#include "thermolab/lattice.hpp"

namespace thermolab::cli {

struct PotentialConfig {
  std::string kind = "constant";  // constant | tabulated | ising | first_coordinate | dyson | mean_field
  double c = 0.0;
  double coupling = 1.0;          // ising J
  std::size_t table_depth = 1;
  std::vector<double> table;      // tabulated, k^depth values
  std::vector<double> g;          // first_coordinate
  double epsilon = 3.0;
  std::size_t truncation = 0;     // dyson; 0 = run.depth + 1
  double beta = 2.0;              // mean_field
  std::optional<double> gamma;    // mean_field; default the positive root
};

struct AlphabetConfig {
  std::size_t k = 2;
  std::vector<double> labels;  // default -1, +1 for k = 2, else 0..k-1
};

struct WeightsConfig {
  std::vector<double> values;  // default uniform (normalized) or counting
  bool normalized = true;
};

struct RunConfig {
  std::size_t depth = 8;
  double tol = 1e-12;
  std::size_t max_iter = 200000;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  std::string out;  // empty = THERMOLAB_OUT or "."
};

struct SpectralConfig {
  bool require_simple = true;  // assert multiplicity 1
  double residual_limit = 1e-10;
};

struct ConformalConfig {
  double tol = 1e-9;
  std::vector<std::size_t> event{1};  // symbols of the conditioning cylinder
  bool expect_invariant = false;      // assert the conditioned measure stays conformal
};

struct SpecificationConfig {
  std::vector<std::size_t> n_list{1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<std::size_t> event{1};
  std::vector<std::vector<std::size_t>> boundaries{{1}, {0}};
  std::size_t event_depth = 1;   // kernel CSV partition depth
  double normalization_tol = 1e-12;
  std::vector<std::size_t> consistency_n;  // empty = skip
  std::size_t consistency_depth = 0;       // 0 = run.depth
  double consistency_tol = 1e-8;
  std::string expect = "none";             // none | decay | persist
  double persist_threshold = 0.0;
};

struct CurieWeissConfig {
  std::vector<double> betas{0.5, 1.0, 2.0};
  std::size_t horizon = 10000;
  std::size_t count = 100000;
  double mixture_t = 0.5;
  bool classify = true;
  std::size_t marginal_depth = 0;  // 0 = skip the conditional marginal check
};

struct FcltConfig {
  std::size_t horizon = 10000;
  std::size_t replicas = 2000;
  std::vector<double> t_grid{0.25, 0.5, 0.75, 1.0};
  std::string observable = "x1";   // x1 | table
  std::vector<double> phi;         // observable = "table": k^depth values
  bool normalize = true;           // normalize the potential first
  std::size_t poisson_n_max = 100000;
  double poisson_tol = 1e-14;
  double variance_rel_tol = 0.0;   // > 0: assert |Var(S_n)/n - sigma^2| <= rel sigma^2
  std::string trace;               // file name for the replica-0 binary trace
};

struct DysonConfig {
  std::vector<double> epsilons{1.0, 3.0};
  std::size_t pairs = 10000;
  std::vector<std::size_t> n_list{1, 2, 5, 10, 20, 50, 100};
  std::size_t flatness_n = 10;
  std::size_t flatness_pairs = 1000;
  std::vector<std::size_t> agree{1, 2, 4, 8, 16};
  std::size_t decay_depth = 14;
  std::size_t n_max = 14;
  std::vector<std::size_t> window{2, 10};
  double slack = 0.5;
  double normalization_limit = 1e-8;
};

struct EntropyConfig {
  std::vector<std::size_t> n_list;  // empty = 1..run.depth
  double tol = 1e-6;
};

struct ExperimentConfig {
  PotentialConfig potential;
  AlphabetConfig alphabet;
  WeightsConfig weights;
  RunConfig run;
  SpectralConfig spectral;
  ConformalConfig conformal;
  SpecificationConfig specification;
  CurieWeissConfig curie_weiss;
  FcltConfig fclt;
  DysonConfig dyson;
  EntropyConfig entropy;

  Alphabet make_alphabet() const;
  AprioriWeights make_weights() const;
  PotentialSpec make_potential() const;
};

ExperimentConfig load_config(const toml::Document& doc);

/// File (optional, empty path = defaults) with --set overrides applied in order.
ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides);

}  // namespace thermolab::cli
