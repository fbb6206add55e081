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

#include "croma/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "croma/error.hpp"

namespace croma {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const char* expected) {
  throw ConfigError("config: key '" + key + "': cannot parse '" + value + "' as " +
                    expected);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) bad_value(key, v, "a real number");
    return d;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    bad_value(key, v, "a real number");
  }
}

uint64_t parse_uint(const std::string& key, const std::string& v) {
  uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    bad_value(key, v, "a non-negative integer");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  bad_value(key, v, "true or false");
}

std::vector<double> parse_double_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split_list(v)) out.push_back(parse_double(key, item));
  if (out.empty()) bad_value(key, v, "a comma-separated list of reals");
  return out;
}

std::vector<size_t> parse_uint_list(const std::string& key, const std::string& v) {
  std::vector<size_t> out;
  for (const auto& item : split_list(v))
    out.push_back(static_cast<size_t>(parse_uint(key, item)));
  if (out.empty()) bad_value(key, v, "a comma-separated list of integers");
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (world.kind != "linear" && world.kind != "concept")
    throw ConfigError("config: key 'world.kind' must be 'linear' or 'concept', got '" +
                      world.kind + "'");
  if (world.kind == "linear") world.linear.validate();
  if (world.kind == "concept") world.concepts.validate();
  protocol.validate();
  train.validate();
  if (strategies.empty()) throw ConfigError("config: key 'strategies.list' is empty");
  for (double r : noise.rates)
    if (r < 0.0 || r > 1.0)
      throw ConfigError("config: key 'noise.rates' entries must lie in [0, 1]");
  if (tradeoff.seeds < 1 || tradeoff.n_align_grid.empty() ||
      tradeoff.sigma_w_grid.empty())
    throw ConfigError("config: section 'tradeoff' requires seeds >= 1 and non-empty grids");
  if (setcount.s_grid.size() < 2 || setcount.n_grid.empty() || setcount.seeds < 1)
    throw ConfigError("config: section 'setcount' requires >= 2 S values, N values and seeds >= 1");
  if (retrieve.pairs < 4)
    throw ConfigError("config: key 'retrieve.pairs' must be >= 4");
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;

  using Setter = std::function<void(const std::string& key, const std::string& value)>;
  std::map<std::string, Setter> setters;
  const auto reg = [&](const char* name, Setter s) { setters[name] = std::move(s); };

  // [run]
  reg("run.seed", [&](const auto& k, const auto& v) { cfg.run.seed = parse_uint(k, v); });
  reg("run.out_dir", [&](const auto&, const auto& v) { cfg.run.out_dir = v; });

  // [world]
  reg("world.kind", [&](const auto&, const auto& v) { cfg.world.kind = v; });
  reg("world.d", [&](const auto& k, const auto& v) { cfg.world.linear.d = parse_uint(k, v); });
  reg("world.sigma", [&](const auto& k, const auto& v) { cfg.world.linear.sigma = parse_double(k, v); });
  reg("world.sigma_w", [&](const auto& k, const auto& v) { cfg.world.linear.sigma_w = parse_double(k, v); });
  reg("world.n1", [&](const auto& k, const auto& v) { cfg.world.linear.n1 = parse_uint(k, v); });
  reg("world.n2", [&](const auto& k, const auto& v) { cfg.world.linear.n2 = parse_uint(k, v); });
  reg("world.n_align", [&](const auto& k, const auto& v) { cfg.world.linear.n_align = parse_uint(k, v); });
  reg("world.latent_dim", [&](const auto& k, const auto& v) { cfg.world.concepts.latent_dim = parse_uint(k, v); });
  reg("world.num_concepts", [&](const auto& k, const auto& v) { cfg.world.concepts.num_concepts = parse_uint(k, v); });
  reg("world.concept_std", [&](const auto& k, const auto& v) { cfg.world.concepts.concept_std = parse_double(k, v); });
  reg("world.source_dim", [&](const auto& k, const auto& v) { cfg.world.concepts.source_dim = parse_uint(k, v); });
  reg("world.target_dim", [&](const auto& k, const auto& v) { cfg.world.concepts.target_dim = parse_uint(k, v); });
  reg("world.train_frac", [&](const auto& k, const auto& v) { cfg.world.concepts.train_frac = parse_double(k, v); });
  reg("world.val_frac", [&](const auto& k, const auto& v) { cfg.world.concepts.val_frac = parse_double(k, v); });
  reg("world.weak_set_count", [&](const auto& k, const auto& v) { cfg.world.concepts.weak_set_count = parse_uint(k, v); });

  // [protocol]
  reg("protocol.n_eval_tasks", [&](const auto& k, const auto& v) { cfg.protocol.n_eval_tasks = parse_uint(k, v); });
  reg("protocol.n_way", [&](const auto& k, const auto& v) {
    cfg.protocol.n_way = parse_uint(k, v);
    cfg.world.concepts.n_way = cfg.protocol.n_way;
    cfg.train.source_n_way = cfg.protocol.n_way;
  });
  reg("protocol.k_grid", [&](const auto& k, const auto& v) { cfg.protocol.k_grid = parse_uint_list(k, v); });
  reg("protocol.repeats", [&](const auto& k, const auto& v) { cfg.protocol.repeats = parse_uint(k, v); });

  // [strategies]
  reg("strategies.list", [&](const auto& k, const auto& v) {
    cfg.strategies.clear();
    for (const auto& name : split_list(v)) {
      try {
        cfg.strategies.push_back(meta::strategy_from_string(name));
      } catch (const ConfigError&) {
        bad_value(k, name, "a known strategy name");
      }
    }
  });

  // [train]
  reg("train.iterations", [&](const auto& k, const auto& v) { cfg.train.iterations = parse_uint(k, v); });
  reg("train.inner_steps", [&](const auto& k, const auto& v) { cfg.train.inner_steps = parse_uint(k, v); });
  reg("train.meta_lr", [&](const auto& k, const auto& v) { cfg.train.meta_lr = parse_double(k, v); });
  reg("train.align_lr", [&](const auto& k, const auto& v) { cfg.train.align_lr = parse_double(k, v); });
  reg("train.classifier_lr", [&](const auto& k, const auto& v) { cfg.train.classifier_lr = parse_double(k, v); });
  reg("train.align_task_size", [&](const auto& k, const auto& v) { cfg.train.align_task_size = parse_uint(k, v); });
  reg("train.align_mode", [&](const auto& k, const auto& v) {
    if (v == "strong") cfg.train.align_mode = synth::AlignMode::kStrong;
    else if (v == "weak") cfg.train.align_mode = synth::AlignMode::kWeak;
    else bad_value(k, v, "'strong' or 'weak'");
  });
  reg("train.source_k_shot", [&](const auto& k, const auto& v) { cfg.train.source_k_shot = parse_uint(k, v); });
  reg("train.embed_dim", [&](const auto& k, const auto& v) { cfg.train.embed_dim = parse_uint(k, v); });
  reg("train.encoder_hidden", [&](const auto& k, const auto& v) { cfg.train.encoder_hidden = parse_uint(k, v); });
  reg("train.classifier_hidden", [&](const auto& k, const auto& v) { cfg.train.classifier_hidden = parse_uint(k, v); });
  reg("train.test_adapt_steps", [&](const auto& k, const auto& v) { cfg.train.test_adapt_steps = parse_uint(k, v); });
  reg("train.test_adapt_encoder", [&](const auto& k, const auto& v) { cfg.train.test_adapt_encoder = parse_bool(k, v); });

  // [loss]
  reg("loss.variant", [&](const auto& k, const auto& v) {
    if (v == "margin") cfg.train.loss.variant = align::AlignVariant::kMarginHinge;
    else if (v == "nce") cfg.train.loss.variant = align::AlignVariant::kNce;
    else bad_value(k, v, "'margin' or 'nce'");
  });
  reg("loss.margin", [&](const auto& k, const auto& v) { cfg.train.loss.margin = parse_double(k, v); });
  reg("loss.negatives_per_pair", [&](const auto& k, const auto& v) { cfg.train.loss.negatives_per_pair = parse_uint(k, v); });
  reg("loss.weak_pairs_per_set", [&](const auto& k, const auto& v) { cfg.train.loss.weak_pairs_per_set = parse_uint(k, v); });
  reg("loss.normalize_embeddings", [&](const auto& k, const auto& v) { cfg.train.loss.normalize_embeddings = parse_bool(k, v); });

  // [tradeoff]
  reg("tradeoff.n_align_grid", [&](const auto& k, const auto& v) { cfg.tradeoff.n_align_grid = parse_uint_list(k, v); });
  reg("tradeoff.sigma_w_grid", [&](const auto& k, const auto& v) { cfg.tradeoff.sigma_w_grid = parse_double_list(k, v); });
  reg("tradeoff.seeds", [&](const auto& k, const auto& v) { cfg.tradeoff.seeds = parse_uint(k, v); });
  reg("tradeoff.mc_samples", [&](const auto& k, const auto& v) { cfg.tradeoff.mc_samples = parse_uint(k, v); });
  reg("tradeoff.risk_eval", [&](const auto& k, const auto& v) {
    if (v == "design") cfg.tradeoff.risk_eval = analysis::RiskEval::kDesign;
    else if (v == "population") cfg.tradeoff.risk_eval = analysis::RiskEval::kPopulation;
    else bad_value(k, v, "'design' or 'population'");
  });
  reg("tradeoff.antithetic", [&](const auto& k, const auto& v) { cfg.tradeoff.antithetic = parse_bool(k, v); });
  reg("tradeoff.max_world_cond", [&](const auto& k, const auto& v) { cfg.tradeoff.max_world_cond = parse_double(k, v); });
  reg("tradeoff.dump_world", [&](const auto& k, const auto& v) { cfg.tradeoff.dump_world = parse_bool(k, v); });

  // [noise]
  reg("noise.rates", [&](const auto& k, const auto& v) { cfg.noise.rates = parse_double_list(k, v); });
  reg("noise.strategy", [&](const auto& k, const auto& v) {
    try {
      cfg.noise.strategy = meta::strategy_from_string(v);
    } catch (const ConfigError&) {
      bad_value(k, v, "a known strategy name");
    }
  });

  // [setcount]
  reg("setcount.s_grid", [&](const auto& k, const auto& v) { cfg.setcount.s_grid = parse_uint_list(k, v); });
  reg("setcount.n_grid", [&](const auto& k, const auto& v) { cfg.setcount.n_grid = parse_uint_list(k, v); });
  reg("setcount.seeds", [&](const auto& k, const auto& v) { cfg.setcount.seeds = parse_uint(k, v); });
  reg("setcount.obs_noise", [&](const auto& k, const auto& v) { cfg.setcount.obs_noise = parse_double(k, v); });
  reg("setcount.eval_samples", [&](const auto& k, const auto& v) { cfg.setcount.eval_samples = parse_uint(k, v); });

  // [retrieve]
  reg("retrieve.pairs", [&](const auto& k, const auto& v) { cfg.retrieve.pairs = parse_uint(k, v); });
  reg("retrieve.strategy", [&](const auto& k, const auto& v) {
    try {
      cfg.retrieve.strategy = meta::strategy_from_string(v);
    } catch (const ConfigError&) {
      bad_value(k, v, "a known strategy name");
    }
  });

  static const std::set<std::string> kSections = {
      "run", "world", "protocol", "strategies", "train",
      "loss", "tradeoff", "noise", "setcount", "retrieve"};

  std::set<std::string> seen;
  std::string section;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config: line " + std::to_string(lineno) + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!kSections.count(section))
        throw ConfigError("config: unknown section '" + section + "'");
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(lineno) +
                        ": expected key = value");
    if (section.empty())
      throw ConfigError("config: line " + std::to_string(lineno) +
                        ": key outside any [section]");
    const std::string key = section + "." + trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("config: unknown key '" + key + "'");
    it->second(key, value);
    seen.insert(key);
  }

  for (const char* required : {"run.seed", "world.kind"}) {
    if (!seen.count(required))
      throw ConfigError("config: missing required key '" + std::string(required) + "'");
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace croma
