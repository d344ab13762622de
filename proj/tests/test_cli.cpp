#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "thermolab/cli/cli.hpp"
#include "thermolab/cli/config.hpp"
#include "thermolab/errors.hpp"

using namespace thermolab;
using namespace thermolab::cli;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "thermolab_cli_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "exp.toml";
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Run {
  int code;
  std::string log, err;
};

Run run(const std::string& name, CliOptions o) {
  std::ostringstream log, err;
  const int code = run_subcommand(name, o, log, err);
  return {code, log.str(), err.str()};
}

std::string parse_error(const std::string& text) {
  try {
    load_config(toml::parse(text));
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::parse);
    return e.what();
  }
  FAIL("expected a parse error");
  return {};
}

}  // namespace

TEST_CASE("toml subset") {
  const auto doc = toml::parse(R"(# comment
top = 1
[a]
x = -2.5e-3   # trailing comment
s = "q\"uote"
flag = true
[a.b]
list = [1, 2,
        3]
nested = [[1], [0, 1]]
big = 1_000
)");
  CHECK(std::get<std::int64_t>(doc.find("top")->data) == 1);
  CHECK(std::get<double>(doc.find("a.x")->data) == -2.5e-3);
  CHECK(std::get<std::string>(doc.find("a.s")->data) == "q\"uote");
  CHECK(std::get<bool>(doc.find("a.flag")->data));
  CHECK(std::get<toml::Array>(doc.find("a.b.list")->data).size() == 3);
  CHECK(doc.find("a.b.list")->line == 8);
  CHECK(std::get<toml::Array>(doc.find("a.b.nested")->data).size() == 2);
  CHECK(std::get<std::int64_t>(doc.find("a.b.big")->data) == 1000);

  auto msg = [](const std::string& t) {
    try {
      toml::parse(t);
    } catch (const Error& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(msg("a = 1\na = 2\n").find("line 2") != std::string::npos);
  CHECK(msg("a = 1\nb = \"open\n").find("line 2") != std::string::npos);
  CHECK(msg("\n\nkind = ising\n").find("line 3") != std::string::npos);
  CHECK(msg("a = [1, 2\n").find("line") != std::string::npos);
  CHECK(msg("x = 1 2\n").find("line 1") != std::string::npos);
}

TEST_CASE("config diagnostics name line and field") {
  CHECK(parse_error("[run]\ndepth = 2.5\n").find("line 2: field 'run.depth'") != std::string::npos);
  CHECK(parse_error("[run]\n\ndeepth = 3\n").find("line 3: field 'run.deepth' is not a known") !=
        std::string::npos);
  CHECK(parse_error("[potential]\nkind = \"bogus\"\n").find("potential.kind") != std::string::npos);
  CHECK(parse_error("[alphabet]\nk = 3\nlabels = [1, 2]\n").find("alphabet.labels") != std::string::npos);
  CHECK(parse_error("[weights]\nnormalized = 1\n").find("expects a boolean") != std::string::npos);
}

TEST_CASE("config defaults and overrides") {
  auto c = load_config("", {});
  CHECK(c.potential.kind == "constant");
  CHECK(c.run.depth == 8);
  CHECK(c.make_weights().normalized());

  c = load_config("", {"potential.kind=ising", "potential.coupling=0.5", "run.depth=3",
                       "run.seed=\"18446744073709551615\""});
  CHECK(c.potential.kind == "ising");
  CHECK(c.potential.coupling == 0.5);
  CHECK(c.run.seed == 18446744073709551615ULL);
  const auto f = c.make_potential();
  CHECK(f.depth() == 2);

  try {
    load_config("", {"run.depth"});
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("override") != std::string::npos);
  }
  try {
    load_config("", {"run.depth=two"});
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("override: field 'run.depth'") != std::string::npos);
  }
}

TEST_CASE("spectral on the uniform zero potential") {
  const auto dir = scratch("spectral");
  CliOptions o;
  o.config_path = write_config(dir, "[potential]\nkind = \"constant\"\n[run]\ndepth = 5\n").string();
  o.out = (dir / "out").string();
  const auto r = run("spectral", o);
  CHECK(r.code == kPass);
  const auto j = json::parse(slurp(dir / "out" / "spectral.json"));
  CHECK(j["spectral"]["rho"].get<double>() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(j["spectral"]["min_h"].get<double>() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(j["spectral"]["max_h"].get<double>() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(j["multiplicity"]["multiplicity"] == 1);
  CHECK(j["config"]["run"]["depth"] == 5);
  CHECK(j["config"]["weights"]["values"].size() == 2);
  CHECK(j["pass"] == true);
  const std::string csv = slurp(dir / "out" / "spectral_vectors.csv");
  CHECK(csv.rfind("index,word,h,nu\n", 0) == 0);
  CHECK(csv.find('\r') == std::string::npos);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 33);
}

TEST_CASE("curie-weiss subcommand") {
  const auto dir = scratch("cw");
  CliOptions o;
  o.overrides = {"curie_weiss.betas=[2.0]", "curie_weiss.count=20000"};
  o.out = dir.string();
  o.seed = 5;
  const auto r = run("curie-weiss", o);
  CHECK(r.code == kPass);
  const auto j = json::parse(slurp(dir / "curie_weiss.json"));
  const auto& b = j["betas"][0];
  CHECK(b["gamma"].get<double>() == doctest::Approx(0.957504).epsilon(1e-6));
  CHECK(b["eigenvalue"].get<double>() == doctest::Approx(6.93433).epsilon(1e-5));
  CHECK(b["classification"]["dimension"] == 2);
  CHECK(j["config"]["run"]["seed"] == 5);
  CHECK(slurp(dir / "curie_weiss.csv").rfind("beta,gamma,eigenvalue,plus_mass", 0) == 0);
}

TEST_CASE("fclt underpowered policy and trace") {
  const auto dir = scratch("fclt");
  CliOptions o;
  o.overrides = {"run.depth=1", "fclt.replicas=10", "fclt.horizon=100", "fclt.trace=\"t.bin\""};
  o.out = dir.string();
  const auto r = run("fclt", o);
  CHECK(r.code == kPass);
  CHECK(r.err.find("underpowered") != std::string::npos);
  const auto j = json::parse(slurp(dir / "fclt.json"));
  CHECK(j["fclt"]["underpowered"] == true);
  CHECK(j["advisory"].contains("ks"));
  CHECK_FALSE(j["assertions"].contains("ks"));
  CHECK(j["variance"]["poisson"].get<double>() == doctest::Approx(1.0));
  CHECK(fs::file_size(dir / "t.bin") == 100 * 20);
  CHECK(std::count(std::istreambuf_iterator<char>(std::ifstream(dir / "fclt_samples.csv").rdbuf()),
                   std::istreambuf_iterator<char>(), '\n') == 11);
}

TEST_CASE("exit codes") {
  const auto dir = scratch("codes");
  CliOptions bad;
  bad.config_path = write_config(dir, "[run]\ndepth = \"deep\"\n").string();
  bad.out = dir.string();
  auto r = run("spectral", bad);
  CHECK(r.code == kInput);
  CHECK(r.err.find("\"kind\":\"parse\"") != std::string::npos);
  CHECK(r.err.find("line 2") != std::string::npos);

  CliOptions missing;
  missing.config_path = (dir / "nope.toml").string();
  CHECK(run("spectral", missing).code == kInput);
  CHECK(run("frobnicate", CliOptions{}).code == kInput);

  CliOptions cap;
  cap.overrides = {"run.depth=40"};
  cap.out = dir.string();
  r = run("spectral", cap);
  CHECK(r.code == kRuntime);
  CHECK(r.err.find("capacity") != std::string::npos);

  CliOptions slow;
  slow.overrides = {"potential.kind=ising", "run.max_iter=2", "run.depth=6"};
  slow.out = dir.string();
  CHECK(run("spectral", slow).code == kRuntime);

  CliOptions fail;
  fail.overrides = {"potential.kind=ising", "run.depth=8", "specification.expect=persist",
                    "specification.n_list=[8]", "specification.persist_threshold=0.2"};
  fail.out = dir.string();
  r = run("specification", fail);
  CHECK(r.code == kAssertion);
  CHECK(r.err.find("sensitivity_persists") != std::string::npos);
}

TEST_CASE("reruns are byte-identical and thread independent") {
  const auto a = scratch("rerun_a"), b = scratch("rerun_b"), c = scratch("rerun_c");
  CliOptions o;
  o.overrides = {"potential.kind=ising", "weights.normalized=false", "run.depth=2",
                 "fclt.replicas=200", "fclt.horizon=500", "fclt.trace=\"t.bin\""};
  o.out = a.string();
  CHECK(run("fclt", o).code == kPass);
  o.out = b.string();
  CHECK(run("fclt", o).code == kPass);
  o.out = c.string();
  o.threads = 3;
  CHECK(run("fclt", o).code == kPass);
  for (const char* f : {"fclt_samples.csv", "fclt_variance.csv", "t.bin"}) {
    CHECK(slurp(a / f) == slurp(b / f));
    CHECK(slurp(a / f) == slurp(c / f));
  }
  // the json echoes the output directory, otherwise identical
  auto ja = json::parse(slurp(a / "fclt.json")), jb = json::parse(slurp(b / "fclt.json"));
  ja["config"]["run"].erase("out");
  jb["config"]["run"].erase("out");
  CHECK(ja.dump() == jb.dump());
}

TEST_CASE("output directory resolution") {
  CHECK(resolve_out_dir(std::string("x"), "y") == "x");
  CHECK(resolve_out_dir(std::nullopt, "y") == "y");
  const auto dir = scratch("env");
  ::setenv("THERMOLAB_OUT", dir.string().c_str(), 1);
  CHECK(resolve_out_dir(std::nullopt, "") == dir.string());
  CHECK(run("entropy", CliOptions{}).code == kPass);
  ::unsetenv("THERMOLAB_OUT");
  CHECK(fs::exists(dir / "entropy.json"));
  CHECK(resolve_out_dir(std::nullopt, "") == ".");
}

TEST_CASE("dyson and conformal subcommands") {
  const auto dir = scratch("dyson");
  CliOptions o;
  o.overrides = {"dyson.epsilons=[3.0]", "dyson.pairs=200", "dyson.flatness_pairs=50",
                 "dyson.decay_depth=10", "dyson.n_max=10", "dyson.window=[2, 8]"};
  o.out = dir.string();
  CHECK(run("dyson", o).code == kPass);
  const std::string decay = slurp(dir / "dyson_decay.csv");
  CHECK(decay.rfind("epsilon,n,norm,bound\n", 0) == 0);
  CHECK(std::count(decay.begin(), decay.end(), '\n') == 11);

  CliOptions c;
  c.overrides = {"potential.kind=ising", "weights.normalized=false", "run.depth=6",
                 "conformal.event=[]", "conformal.expect_invariant=true"};
  c.out = dir.string();
  CHECK(run("conformal", c).code == kPass);
}
