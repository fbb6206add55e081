// Copyright 2026 The Croma Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "croma/config.hpp"
#include "croma/csv.hpp"
#include "croma/error.hpp"

using namespace croma;
namespace fs = std::filesystem;

namespace {

const char* kValidConfig = R"(# full experiment configuration
[run]
seed = 7
out_dir = out

[world]
kind = concept
latent_dim = 4
num_concepts = 30
concept_std = 0.35
source_dim = 12
target_dim = 12
train_frac = 0.6
val_frac = 0.2
weak_set_count = 8

[protocol]
n_eval_tasks = 8
n_way = 5
k_grid = 1,5,10
repeats = 10

[strategies]
list = croma,align_classify

[train]
iterations = 800
inner_steps = 5
meta_lr = 0.1
align_lr = 1e-3
classifier_lr = 1e-3
align_task_size = 24
align_mode = strong
source_k_shot = 5
embed_dim = 8
encoder_hidden = 32
classifier_hidden = 32
test_adapt_steps = 10
test_adapt_encoder = true

[loss]
variant = margin
margin = 0.1
negatives_per_pair = 5
weak_pairs_per_set = 4
normalize_embeddings = true

[noise]
rates = 0,0.2,0.4,0.6
strategy = croma
)";

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CROMA_BIN) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

}  // namespace

TEST_CASE("reference defaults stay pinned") {
  // The defaults carry the reference configuration; a config file with just
  // the required keys must land on them exactly.
  const auto cfg = parse_config_text("[run]\nseed = 0\n[world]\nkind = concept\n");
  CHECK(cfg.train.iterations == 800);
  CHECK(cfg.train.meta_lr == 0.1);
  CHECK(cfg.train.align_lr == 1e-3);
  CHECK(cfg.train.classifier_lr == 1e-3);
  CHECK(cfg.train.inner_steps == 5);
  CHECK(cfg.train.loss.margin == 0.1);
  CHECK(cfg.train.loss.variant == align::AlignVariant::kMarginHinge);
  CHECK(cfg.train.loss.negatives_per_pair == 5);
  CHECK(cfg.train.loss.normalize_embeddings);
  CHECK(cfg.protocol.n_eval_tasks == 8);
  CHECK(cfg.protocol.n_way == 5);
  CHECK(cfg.protocol.k_grid == std::vector<size_t>{1, 5, 10});
  CHECK(cfg.protocol.repeats == 10);

  const auto lin = parse_config_text("[run]\nseed = 0\n[world]\nkind = linear\n");
  CHECK(lin.world.linear.d == 20);
  CHECK(lin.world.linear.sigma == 1.0);
  CHECK(lin.world.linear.n1 == 250);
  CHECK(lin.world.linear.n2 == 40);
}

TEST_CASE("a complete configuration parses with the stated values") {
  const auto cfg = parse_config_text(kValidConfig);
  CHECK(cfg.run.seed == 7);
  CHECK(cfg.world.kind == "concept");
  CHECK(cfg.protocol.k_grid == std::vector<size_t>{1, 5, 10});
  CHECK(cfg.strategies.size() == 2);
  CHECK(cfg.train.iterations == 800);
  CHECK(cfg.train.meta_lr == doctest::Approx(0.1));
  CHECK(cfg.train.loss.margin == doctest::Approx(0.1));
  CHECK(cfg.noise.rates.size() == 4);
}

TEST_CASE("missing required keys are named in the error") {
  CHECK_THROWS_WITH_AS(parse_config_text("[world]\nkind = concept\n"),
                       doctest::Contains("run.seed"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("[run]\nseed = 1\n"),
                       doctest::Contains("world.kind"), ConfigError);
}

TEST_CASE("unknown sections and keys are named in the error") {
  CHECK_THROWS_WITH_AS(parse_config_text("[bogus]\nx = 1\n"),
                       doctest::Contains("bogus"), ConfigError);
  const std::string bad = std::string(kValidConfig) + "\n[run]\nmystery_knob = 3\n";
  CHECK_THROWS_WITH_AS(parse_config_text(bad), doctest::Contains("run.mystery_knob"),
                       ConfigError);
}

TEST_CASE("every section rejects an injected unknown key by name") {
  // Property over mutated configs: appending a bogus key to each section
  // yields an error naming exactly that key.
  for (const char* section :
       {"run", "world", "protocol", "strategies", "train", "loss", "noise"}) {
    std::istringstream in(kValidConfig);
    std::ostringstream out;
    std::string line;
    const std::string header = std::string("[") + section + "]";
    while (std::getline(in, line)) {
      out << line << "\n";
      if (line == header) out << "unexpected_key = 1\n";
    }
    const std::string expected = std::string(section) + ".unexpected_key";
    CHECK_THROWS_WITH_AS(parse_config_text(out.str()),
                         doctest::Contains(expected.c_str()), ConfigError);
  }
}

TEST_CASE("malformed values are rejected naming the key") {
  std::string bad = kValidConfig;
  bad += "\n[train]\niterations = many\n";
  CHECK_THROWS_WITH_AS(parse_config_text(bad), doctest::Contains("train.iterations"),
                       ConfigError);
  std::string bad2 = kValidConfig;
  bad2 += "\n[world]\nkind = holographic\n";
  CHECK_THROWS_WITH_AS(parse_config_text(bad2), doctest::Contains("world.kind"),
                       ConfigError);
}

TEST_CASE("strategy lists reject unknown names") {
  std::string bad = kValidConfig;
  bad += "\n[strategies]\nlist = croma,telepathy\n";
  CHECK_THROWS_WITH_AS(parse_config_text(bad), doctest::Contains("telepathy"),
                       ConfigError);
}

// --- CLI process-level checks ----------------------------------------------

TEST_CASE("plan subcommand is deterministic and correct on the 4-vertex graph") {
  const fs::path dir = "cli_test_plan";
  fs::create_directories(dir);
  write_file((dir / "graph.csv").string(),
             "kind,src,dst,error\n"
             "align,x_t,x_s,0.1\n"
             "classify,x_s,y_s,0\n"
             "taskrel,y_s,y_t,0.05\n"
             "classify,x_t,y_t,0.5\n");
  const std::string base = "plan --graph " + (dir / "graph.csv").string() +
                           " --from x_t --to y_t --out " + dir.string();
  REQUIRE(run_cli(base) == 0);
  const std::string first = read_file((dir / "plan.csv").string());
  REQUIRE(run_cli(base) == 0);
  CHECK(first == read_file((dir / "plan.csv").string()));
  CHECK(first.find("align,x_t,x_s") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("plan subcommand exit codes") {
  const fs::path dir = "cli_test_plan_err";
  fs::create_directories(dir);
  write_file((dir / "bad.csv").string(), "kind,src,dst,error\nclassify,m,t\n");
  CHECK(run_cli("plan --graph " + (dir / "bad.csv").string() +
                " --from m --to t --out " + dir.string()) == 4);
  CHECK(run_cli("plan --graph " + (dir / "missing.csv").string() +
                " --from m --to t --out " + dir.string()) == 4);
  write_file((dir / "ok.csv").string(),
             "kind,src,dst,error\nclassify,m,t,0.1\nclassify,m2,t,0.2\n");
  CHECK(run_cli("plan --graph " + (dir / "ok.csv").string() +
                " --from m --to bogus --out " + dir.string()) == 2);
  fs::remove_all(dir);
}

TEST_CASE("config errors surface as exit code 2") {
  const fs::path dir = "cli_test_cfg";
  fs::create_directories(dir);
  write_file((dir / "bad.ini").string(), "[run]\nseed = 1\n");  // world.kind missing
  CHECK(run_cli("train --config " + (dir / "bad.ini").string()) == 2);
  CHECK(run_cli("train --config " + (dir / "nonexistent.ini").string()) == 4);
  fs::remove_all(dir);
}

namespace {

const char* kTinyConceptConfig = R"([run]
seed = 11
[world]
kind = concept
num_concepts = 18
latent_dim = 3
source_dim = 6
target_dim = 6
[protocol]
n_eval_tasks = 2
n_way = 3
k_grid = 1,5
repeats = 2
[strategies]
list = croma
[train]
iterations = 12
inner_steps = 2
align_task_size = 12
embed_dim = 4
encoder_hidden = 8
classifier_hidden = 8
test_adapt_steps = 3
)";

std::string dir_fingerprint(const fs::path& dir) {
  std::string all;
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    all += f.string();
    all += "\n";
    all += read_file(f.string());
  }
  return all;
}

}  // namespace

TEST_CASE("train then evaluate round trip through a saved meta state") {
  const fs::path dir = "cli_test_train_eval";
  fs::create_directories(dir);
  std::string cfg_text = kTinyConceptConfig;
  write_file((dir / "cfg.ini").string(), cfg_text);
  const std::string cfg = (dir / "cfg.ini").string();

  REQUIRE(run_cli("train --config " + cfg + " --out " + (dir / "a").string()) == 0);
  CHECK(fs::exists(dir / "a" / "metastate" / "weights.csv"));
  CHECK(fs::exists(dir / "a" / "training_log.csv"));

  // Training log has one row per iteration.
  const auto log = read_csv((dir / "a" / "training_log.csv").string());
  CHECK(log.rows.size() == 12);

  REQUIRE(run_cli("evaluate --config " + cfg + " --metastate " +
                  (dir / "a" / "metastate").string() + " --out " +
                  (dir / "b").string()) == 0);
  CHECK(fs::exists(dir / "b" / "episodes.csv"));
  CHECK(fs::exists(dir / "b" / "summary.csv"));
  fs::remove_all(dir);
}

TEST_CASE("train with zero iterations dumps the initialization") {
  const fs::path dir = "cli_test_zero_iter";
  fs::create_directories(dir);
  std::string text = kTinyConceptConfig;
  const auto pos = text.find("iterations = 12");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 15, "iterations = 0\n#");
  write_file((dir / "cfg.ini").string(), text);
  REQUIRE(run_cli("train --config " + (dir / "cfg.ini").string() + " --out " +
                  (dir / "out").string()) == 0);
  const auto log = read_csv((dir / "out" / "training_log.csv").string());
  CHECK(log.rows.empty());
  CHECK(fs::exists(dir / "out" / "metastate" / "weights.csv"));
  fs::remove_all(dir);
}

TEST_CASE("cli reruns are byte-identical: evaluate") {
  const fs::path dir = "cli_test_determinism";
  fs::create_directories(dir);
  write_file((dir / "cfg.ini").string(), kTinyConceptConfig);
  const std::string cfg = (dir / "cfg.ini").string();
  REQUIRE(run_cli("evaluate --config " + cfg + " --out " + (dir / "r1").string()) == 0);
  REQUIRE(run_cli("evaluate --config " + cfg + " --out " + (dir / "r2").string()) == 0);
  CHECK(read_file((dir / "r1" / "episodes.csv").string()) ==
        read_file((dir / "r2" / "episodes.csv").string()));
  CHECK(read_file((dir / "r1" / "summary.csv").string()) ==
        read_file((dir / "r2" / "summary.csv").string()));

  // A different seed changes the outputs.
  REQUIRE(run_cli("evaluate --config " + cfg + " --seed 999 --out " +
                  (dir / "r3").string()) == 0);
  CHECK(read_file((dir / "r1" / "episodes.csv").string()) !=
        read_file((dir / "r3" / "episodes.csv").string()));
  fs::remove_all(dir);
}

TEST_CASE("cli reruns are byte-identical: tradeoff") {
  const fs::path dir = "cli_test_tradeoff";
  fs::create_directories(dir);
  write_file((dir / "cfg.ini").string(),
             "[run]\nseed = 5\n[world]\nkind = linear\n"
             "[tradeoff]\nn_align_grid = 25,100\nsigma_w_grid = 0.1,0.5\n"
             "seeds = 3\nmc_samples = 1000\n");
  const std::string cfg = (dir / "cfg.ini").string();
  REQUIRE(run_cli("tradeoff --config " + cfg + " --out " + (dir / "r1").string()) == 0);
  REQUIRE(run_cli("tradeoff --config " + cfg + " --out " + (dir / "r2").string()) == 0);
  CHECK(dir_fingerprint(dir / "r1") != "");
  CHECK(read_file((dir / "r1" / "measured.csv").string()) ==
        read_file((dir / "r2" / "measured.csv").string()));
  CHECK(read_file((dir / "r1" / "predictions.csv").string()) ==
        read_file((dir / "r2" / "predictions.csv").string()));
  CHECK(read_file((dir / "r1" / "figure_syn_data.csv").string()) ==
        read_file((dir / "r2" / "figure_syn_data.csv").string()));

  // Schema: one row per (n_align, sigma_w, seed, method).
  const auto measured = read_csv((dir / "r1" / "measured.csv").string());
  CHECK(measured.rows.size() == 2 * 2 * 3 * 3);
  fs::remove_all(dir);
}
