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

#include "croma/linear_world.hpp"

#include <Eigen/Dense>

#include <cmath>

#include "croma/csv.hpp"
#include "croma/error.hpp"
#include "croma/rng.hpp"

namespace croma::synth {

namespace {

// Substream tags within a world seed.
constexpr uint64_t kTagWorld = 1;
constexpr uint64_t kTagD1 = 2;
constexpr uint64_t kTagD2 = 3;
constexpr uint64_t kTagUnsup = 4;

double cond_number(const Mat& m) {
  Eigen::MatrixXd e(m.rows, m.cols);
  for (size_t i = 0; i < m.rows; ++i)
    for (size_t j = 0; j < m.cols; ++j) e(static_cast<long>(i), static_cast<long>(j)) = m.at(i, j);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(e);
  const auto& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  if (smin <= 0.0) return std::numeric_limits<double>::infinity();
  return sv(0) / smin;
}

}  // namespace

void LinearWorldConfig::validate() const {
  if (d < 1) throw ConfigError("linear world: d must be >= 1");
  if (n1 < 1 || n2 < 1 || n_align < 1)
    throw ConfigError("linear world: sample counts must be >= 1");
  if (sigma < 0.0 || sigma_w < 0.0)
    throw ConfigError("linear world: noise levels must be >= 0");
}

std::pair<LinearWorld, LinearDatasets> gen_linear_world(const LinearWorldConfig& cfg,
                                                        uint64_t seed) {
  cfg.validate();
  LinearWorld world;
  world.cfg = cfg;

  Rng rng(seed, kTagWorld);
  const double wstd = 1.0 / std::sqrt(static_cast<double>(cfg.d));
  constexpr double kMaxCond = 1e6;
  bool ok = false;
  for (int attempt = 0; attempt < 10; ++attempt) {
    world.w = Mat::gaussian(cfg.d, cfg.d, rng, wstd);
    world.condition_number = cond_number(world.w);
    if (world.condition_number <= kMaxCond) {
      ok = true;
      break;
    }
  }
  if (!ok)
    throw NumericError("gen_linear_world: could not draw a well-conditioned W in 10 attempts");

  // Teacher u1 uniform on the unit sphere; u2 = W^T u1 keeps the two
  // teachers exactly consistent: u1 . (W x2) == u2 . x2.
  world.u1 = Mat(1, cfg.d);
  double norm = 0.0;
  do {
    for (auto& x : world.u1.data) x = rng.normal();
    norm = frobenius_norm(world.u1);
  } while (norm == 0.0);
  world.u1 *= 1.0 / norm;
  world.u2 = matmul(world.u1, world.w);  // row form of u2 = W^T u1

  return {world, gen_linear_datasets(world, seed)};
}

std::pair<LinearWorld, LinearDatasets> gen_linear_world_conditioned(
    const LinearWorldConfig& cfg, uint64_t seed, double max_cond) {
  auto world = gen_linear_world(cfg, seed);
  if (max_cond > 0.0) {
    for (uint64_t redraw = 1; world.first.condition_number > max_cond; ++redraw) {
      if (redraw > 256)
        throw NumericError(
            "gen_linear_world_conditioned: no draw satisfied the condition gate");
      world = gen_linear_world(cfg, derive_stream(seed, 9000 + redraw));
    }
  }
  return world;
}

LinearDatasets gen_linear_datasets(const LinearWorld& world, uint64_t stream_id) {
  const auto& cfg = world.cfg;
  LinearDatasets d;

  const auto draw_block = [&](Rng& rng, size_t n) {
    Mat x2 = Mat::gaussian(n, cfg.d, rng);
    return x2;
  };

  {
    Rng rng(stream_id, kTagD1);
    Mat x2 = draw_block(rng, cfg.n1);
    d.x1_sup = matmul_nt(x2, world.w);  // rows are (W x2)^T
    d.y1_sup = Mat(cfg.n1, 1);
    for (size_t i = 0; i < cfg.n1; ++i)
      d.y1_sup.at(i, 0) = dot_rows(d.x1_sup, i, world.u1, 0) + cfg.sigma * rng.normal();
  }
  {
    Rng rng(stream_id, kTagD2);
    d.x2_sup = draw_block(rng, cfg.n2);
    d.y2_sup = Mat(cfg.n2, 1);
    for (size_t i = 0; i < cfg.n2; ++i)
      d.y2_sup.at(i, 0) = dot_rows(d.x2_sup, i, world.u2, 0) + cfg.sigma * rng.normal();
  }
  {
    Rng rng(stream_id, kTagUnsup);
    d.x2_unsup = draw_block(rng, cfg.n_align);
    d.x1_unsup = matmul_nt(d.x2_unsup, world.w);
    for (auto& x : d.x1_unsup.data) x += cfg.sigma_w * rng.normal();
  }
  return d;
}

namespace {

void save_xy(const std::string& path, const Mat& x, const Mat& y,
             const std::string& xprefix) {
  std::vector<std::string> header;
  for (size_t j = 0; j < x.cols; ++j) header.push_back(xprefix + std::to_string(j));
  header.push_back("y");
  CsvWriter w(header);
  for (size_t i = 0; i < x.rows; ++i) {
    std::vector<std::string> row;
    for (size_t j = 0; j < x.cols; ++j) row.push_back(format_double(x.at(i, j)));
    row.push_back(format_double(y.at(i, 0)));
    w.add_row(row);
  }
  w.save(path);
}

}  // namespace

void save_csv_bundle(const LinearWorld& world, const LinearDatasets& data,
                     const std::string& dir) {
  const auto& cfg = world.cfg;
  {
    // world.csv: one row per quantity, flatter than a matrix-per-file bundle.
    CsvWriter w({"name", "row", "col", "value"});
    const auto emit = [&](const std::string& name, const Mat& m) {
      for (size_t i = 0; i < m.rows; ++i)
        for (size_t j = 0; j < m.cols; ++j)
          w.add_row({name, std::to_string(i), std::to_string(j),
                     format_double(m.at(i, j))});
    };
    emit("u1", world.u1);
    emit("u2", world.u2);
    emit("W", world.w);
    w.add_row({"d", "0", "0", std::to_string(cfg.d)});
    w.add_row({"sigma", "0", "0", format_double(cfg.sigma)});
    w.add_row({"sigma_W", "0", "0", format_double(cfg.sigma_w)});
    w.add_row({"cond_W", "0", "0", format_double(world.condition_number)});
    w.save(dir + "/world.csv");
  }
  save_xy(dir + "/d1sup.csv", data.x1_sup, data.y1_sup, "x1_");
  save_xy(dir + "/d2sup.csv", data.x2_sup, data.y2_sup, "x2_");
  {
    std::vector<std::string> header;
    for (size_t j = 0; j < data.x1_unsup.cols; ++j) header.push_back("x1_" + std::to_string(j));
    for (size_t j = 0; j < data.x2_unsup.cols; ++j) header.push_back("x2_" + std::to_string(j));
    CsvWriter w(header);
    for (size_t i = 0; i < data.x1_unsup.rows; ++i) {
      std::vector<std::string> row;
      for (size_t j = 0; j < data.x1_unsup.cols; ++j)
        row.push_back(format_double(data.x1_unsup.at(i, j)));
      for (size_t j = 0; j < data.x2_unsup.cols; ++j)
        row.push_back(format_double(data.x2_unsup.at(i, j)));
      w.add_row(row);
    }
    w.save(dir + "/dunsup.csv");
  }
}

}  // namespace croma::synth
