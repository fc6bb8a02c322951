// Copyright 2026 The GeoGNN Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "geognn/checkpoint.hpp"
#include "geognn/dual_graph.hpp"
#include "geognn/errors.hpp"
#include "geognn/featurizer.hpp"
#include "geognn/metrics.hpp"
#include "geognn/model.hpp"
#include "geognn/mol_io.hpp"
#include "geognn/pretrain_tasks.hpp"
#include "geognn/rng.hpp"
#include "geognn/synthetic.hpp"
#include "geognn/trainer.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace geognn;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

fs::path work_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "geognn_acceptance";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<double> graph_vector(const GeoGnn& model, const ParamStore& store, const Molecule& m,
                                 const FeatureConfig& features = {}) {
  const Sample s = make_sample(m, features);
  Tape tape;
  const Tensor g = model.forward(tape, store, s.graph, s.encoded, Mode::kEval).graph.value();
  return {g.values().begin(), g.values().end()};
}

Outcome gradient_correctness() {
  const auto start = Clock::now();
  const auto mols = testing::random_molecules(20, 101, 2, 6, 3);
  ModelConfig config = testing::small_model(2, 8);
  config.num_tasks = 2;
  config.fingerprint_bits = 3;
  double worst = 0.0;
  std::string where;
  std::size_t checked = 0;
  for (std::size_t i = 0; i < mols.size(); ++i) {
    const GeoGnn model(config, feature_layout({}));
    ParamStore store;
    model.init_params(store, 200 + i);
    const Sample s = make_sample(mols[i], {});
    const TaskSelection tasks;
    const std::uint64_t seed = 300 + i;
    const auto r = testing::check_param_gradients(store, [&](Tape& tape) {
      const PretrainTerms t = pretrain_terms(tape, store, model, s, tasks, seed, Mode::kTrain);
      const GraphEmbedding emb = model.forward(tape, store, s.graph, s.encoded, Mode::kTrain, seed + 1);
      return add(t.total, sum(square(model.head_downstream(tape, store, emb.graph))));
    });
    checked += r.checked;
    if (r.max_rel_error > worst) worst = r.max_rel_error, where = mols[i].id + " " + r.worst;
  }
  const double secs = seconds_since(start);
  return {worst < 1e-4 && secs < 120.0, "max relative error " + fmt(worst) + " over " + std::to_string(checked) +
                                            " scalars (" + where + "), " + fmt(secs) + " s"};
}

Outcome permutation_invariance() {
  const GeoGnn model(ModelConfig{}, feature_layout({}));
  ParamStore store;
  model.init_params(store, 2);
  Rng rng(3);
  double worst = 0.0;
  for (const Molecule& m : testing::random_molecules(50, 102, 2, 14)) {
    const auto base = graph_vector(model, store, m);
    for (int k = 0; k < 3; ++k) {
      const Molecule p = permute_atoms(m, random_permutation(m.num_atoms(), rng));
      worst = std::max(worst, testing::max_abs_diff(base, graph_vector(model, store, p)));
    }
  }
  return {worst < 1e-9, "max |dh_G| " + fmt(worst)};
}

Outcome rigid_motion_invariance() {
  const GeoGnn model(ModelConfig{}, feature_layout({}));
  ParamStore store;
  model.init_params(store, 4);
  Rng rng(5);
  double worst = 0.0;
  for (const Molecule& m : testing::random_molecules(50, 103, 2, 14)) {
    const auto base = graph_vector(model, store, m);
    for (int k = 0; k < 3; ++k)
      worst = std::max(worst, testing::max_abs_diff(base, graph_vector(model, store, random_rigid_motion(m, rng))));
  }
  return {worst < 1e-9, "max |dh_G| " + fmt(worst)};
}

Outcome geometry_discrimination() {
  const Molecule cis = testing::load_fixture("cis_dichloroethene.sdf");
  const Molecule trans = testing::load_fixture("trans_dichloroethene.sdf");
  if (cis.atoms != trans.atoms || cis.bonds != trans.bonds) return {false, "fixtures differ in topology"};
  FeatureConfig ablated;
  ablated.geometry = false;
  const GeoGnn geo(ModelConfig{}, feature_layout({}));
  const GeoGnn flat(ModelConfig{}, feature_layout(ablated));
  ParamStore geo_store, flat_store;
  geo.init_params(geo_store, 6);
  flat.init_params(flat_store, 6);
  const double with = testing::max_abs_diff(graph_vector(geo, geo_store, cis), graph_vector(geo, geo_store, trans));
  const double without = testing::max_abs_diff(graph_vector(flat, flat_store, cis, ablated),
                                               graph_vector(flat, flat_store, trans, ablated));
  return {with > 1e-6 && without < 1e-12, "geometry " + fmt(with) + ", ablated " + fmt(without)};
}

const fs::path kPretrained = work_dir() / "ssl" / "checkpoint.ckpt";

Outcome ssl_trainability() {
  const auto start = Clock::now();
  const auto mols = generate_molecules(200, 104);
  PretrainOptions o;
  o.run.epochs = 50;
  o.run.seed = 7;
  o.out_dir = kPretrained.parent_path();
  const PretrainResult r = pretrain(make_samples(mols, {}), {}, initial_checkpoint(ModelConfig{}, {}, 7), o);
  const double secs = seconds_since(start);
  const PretrainLossValue& first = r.history.front().train;
  const PretrainLossValue& last = r.history.back().train;
  const double rl = last.length / first.length;
  const double ra = last.angle / first.angle;
  const double rd = last.distance / first.distance;
  const bool pass = rl <= 0.5 && ra <= 0.5 && rd <= 0.5 && secs < 600.0;
  return {pass, "epoch 50 / epoch 1: length " + fmt(rl) + ", angle " + fmt(ra) + ", distance " + fmt(rd) + ", " +
                    fmt(secs) + " s"};
}

Outcome pretraining_benefit() {
  if (!fs::exists(kPretrained)) return {false, "no pretrained checkpoint"};
  const Checkpoint body = load_checkpoint(kPretrained);
  auto mols = generate_molecules(48, 105);
  attach_geometry_label(mols, "y");
  constexpr double kThreshold = 0.5;
  constexpr std::size_t kMaxEpochs = 200;
  auto epochs_to_threshold = [&](const std::optional<Checkpoint>& init, std::uint64_t seed) {
    FinetuneOptions o;
    o.run.epochs = kMaxEpochs;
    o.run.seed = seed;
    o.run.stop_at_train_metric = kThreshold;
    const FinetuneResult r = finetune(mols, {}, {}, init, body.model, body.features, o);
    return r.history.back().train <= kThreshold ? r.history.size() : kMaxEpochs + 1;
  };
  std::vector<std::size_t> pre, scratch;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    pre.push_back(epochs_to_threshold(body, seed));
    scratch.push_back(epochs_to_threshold(std::nullopt, seed));
  }
  auto median = [](std::vector<std::size_t> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  auto list = [](const std::vector<std::size_t>& v) {
    std::string s;
    for (auto x : v) s += (s.empty() ? "" : ",") + std::to_string(x);
    return s;
  };
  const std::size_t mp = median(pre), ms = median(scratch);
  return {mp < ms, "epochs to train RMSE <= " + fmt(kThreshold) + ": pretrained median " + std::to_string(mp) +
                       " [" + list(pre) + "], scratch median " + std::to_string(ms) + " [" + list(scratch) + "]"};
}

Outcome overfit_sanity() {
  auto mols = generate_molecules(32, 106);
  attach_geometry_label(mols, "y");
  FinetuneOptions o;
  o.run.epochs = 500;
  o.run.seed = 8;
  o.run.stop_at_train_metric = 0.05;
  ModelConfig model;
  model.dropout = 0.0;
  const FinetuneResult r = finetune(mols, {}, {}, std::nullopt, model, {}, o);
  double best = r.history.front().train;
  for (const auto& e : r.history) best = std::min(best, e.train);
  return {best < 0.05, "train RMSE " + fmt(best) + " after " + std::to_string(r.history.size()) + " epochs"};
}

// Plain two-layer perceptron head evaluated from raw weights.
std::vector<double> mlp_head(const ParamStore& store, const std::string& name, const std::vector<double>& x) {
  const Tensor& w0 = store.at(name + ".0.w").value;
  const Tensor& b0 = store.at(name + ".0.b").value;
  const Tensor& w1 = store.at(name + ".1.w").value;
  const Tensor& b1 = store.at(name + ".1.b").value;
  std::vector<double> hidden(w0.cols());
  for (std::size_t j = 0; j < w0.cols(); ++j) {
    double s = b0(0, j);
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * w0(i, j);
    hidden[j] = std::max(0.0, s);
  }
  std::vector<double> out(w1.cols());
  for (std::size_t j = 0; j < w1.cols(); ++j) {
    double s = b1(0, j);
    for (std::size_t i = 0; i < hidden.size(); ++i) s += hidden[i] * w1(i, j);
    out[j] = s;
  }
  return out;
}

std::vector<double> concat_rows(const Tensor& h, std::initializer_list<std::size_t> rows) {
  std::vector<double> x;
  for (std::size_t r : rows)
    for (std::size_t c = 0; c < h.cols(); ++c) x.push_back(h(r, c));
  return x;
}

Outcome metric_oracles() {
  Rng rng(9);
  bool auc_ok = true;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(150);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = trial % 2 ? rng.uniform() : static_cast<double>(rng.below(4));
      labels[i] = rng.uniform() < 0.5;
    }
    labels[0] = 1;
    labels[1] = 0;
    std::int64_t twice = 0, pos = 0;
    for (std::size_t i = 0; i < n; ++i) {
      pos += labels[i];
      for (std::size_t j = 0; j < n; ++j)
        if (labels[i] && !labels[j]) twice += scores[i] > scores[j] ? 2 : scores[i] == scores[j];
    }
    const double expected = static_cast<double>(twice) / (2.0 * static_cast<double>(pos * (static_cast<std::int64_t>(n) - pos)));
    auc_ok &= metric_rocauc(scores, labels) == expected;
  }

  double reg_err = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(60);
    std::vector<double> p(n);
    std::vector<std::optional<double>> t(n);
    double se = 0.0, ae = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = rng.normal();
      const double y = rng.normal();
      t[i] = y;
      se += (p[i] - y) * (p[i] - y);
      ae += std::abs(p[i] - y);
    }
    reg_err = std::max(reg_err, std::abs(metric_rmse(p, t) - std::sqrt(se / static_cast<double>(n))));
    reg_err = std::max(reg_err, std::abs(metric_mae(p, t) - ae / static_cast<double>(n)));
  }

  ModelConfig config = testing::small_model();
  const GeoGnn model(config, feature_layout({}));
  ParamStore store;
  model.init_params(store, 10);
  double loss_err = 0.0;
  for (const Molecule& m : testing::random_molecules(30, 107, 4, 4)) {
    const Sample s = make_sample(m, {});
    Rng mask_rng(m.num_bonds() + 1);
    const MaskSelection mask = select_mask(s.graph, 0.5, mask_rng);
    Tape tape;
    const GraphEmbedding emb = model.forward(tape, store, s.graph, s.encoded, Mode::kEval);
    const Tensor h = emb.atoms.value();
    const DualGraph& g = s.graph;

    double length = 0.0;
    for (std::size_t i = 0; i < mask.bonds.size(); ++i) {
      const auto b = mask.bonds[i];
      const double e = mlp_head(store, "head.length", concat_rows(h, {g.bond_a[b], g.bond_b[b]}))[0] -
                       mask.bond_lengths[i];
      length += e * e;
    }
    if (!mask.bonds.empty()) length /= static_cast<double>(mask.bonds.size());
    double angle = 0.0;
    for (std::size_t i = 0; i < mask.angles.size(); ++i) {
      const BondAngle& a = g.angles[mask.angles[i]];
      const double e = mlp_head(store, "head.angle", concat_rows(h, {a.end1, a.center, a.end2}))[0] -
                       mask.angle_values[i];
      angle += e * e;
    }
    if (!mask.angles.empty()) angle /= static_cast<double>(mask.angles.size());
    double distance = 0.0;
    for (std::size_t u = 0; u < g.num_atoms; ++u)
      for (std::size_t v = 0; v < g.num_atoms; ++v) {
        const auto z = mlp_head(store, "head.distance", concat_rows(h, {u, v}));
        const double d = g.distances(u, v);
        const std::size_t target = std::min<std::size_t>(static_cast<std::size_t>(std::floor(d)), z.size() - 1);
        double norm = 0.0;
        for (double zc : z) norm += std::exp(zc);
        distance += std::log(norm) - z[target];
      }
    distance /= static_cast<double>(g.num_atoms * g.num_atoms);

    loss_err = std::max(loss_err, std::abs(loss_length(tape, store, model, emb, g, mask).value().item() - length));
    loss_err = std::max(loss_err, std::abs(loss_angle(tape, store, model, emb, g, mask).value().item() - angle));
    loss_err = std::max(loss_err, std::abs(loss_distance(tape, store, model, emb, g).value().item() - distance));
  }
  return {auc_ok && reg_err < 1e-12 && loss_err < 1e-10,
          std::string("ROC-AUC exact ") + (auc_ok ? "yes" : "no") + ", regression " + fmt(reg_err) +
              ", geometry losses " + fmt(loss_err)};
}

Outcome featurization_exactness() {
  const FeatureConfig config;
  Rng rng(11);
  double rbf_err = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double x = rng.uniform(0.0, 6.0);
    const auto e = rbf_expand(x, config.length_grid, 10.0);
    for (std::size_t m = 0; m < e.size(); ++m) {
      const double mu = config.length_grid.start + config.length_grid.stride * static_cast<double>(m);
      rbf_err = std::max(rbf_err, std::abs(e[m] - std::exp(-10.0 * (x - mu) * (x - mu))));
    }
  }
  const FeatureLayout layout = feature_layout(config);
  double onehot_err = 0.0;
  std::size_t angle_mismatch = 0;
  auto mols = testing::random_molecules(300, 108, 1, 6);
  for (const char* f : {"water.sdf", "methanamine.sdf", "cyclopropane.sdf", "cis_dichloroethene.sdf"})
    mols.push_back(testing::load_fixture(f));
  for (const Molecule& m : mols) {
    const DualGraph g = build_dual_graph(m);
    const EncodedGraph e = encode(g, m, config);
    auto check = [&](const Tensor& t, const std::vector<FeatureBlock>& blocks) {
      for (std::size_t r = 0; r < t.rows(); ++r)
        for (const auto& b : blocks) {
          if (!b.one_hot) continue;
          double s = 0.0;
          for (std::size_t c = 0; c < b.width; ++c) s += t(r, b.offset + c);
          onehot_err = std::max(onehot_err, std::abs(s - 1.0));
        }
    };
    check(e.atom_features, layout.atom);
    check(e.bond_features, layout.bond);
    std::size_t brute = 0;
    for (std::size_t i = 0; i < m.bonds.size(); ++i)
      for (std::size_t j = i + 1; j < m.bonds.size(); ++j) {
        const Bond& x = m.bonds[i];
        const Bond& y = m.bonds[j];
        brute += x.a == y.a || x.a == y.b || x.b == y.a || x.b == y.b;
      }
    std::size_t by_degree = 0;
    for (int d : atom_degrees(m)) by_degree += static_cast<std::size_t>(d * (d - 1) / 2);
    angle_mismatch += g.num_angles() != brute || by_degree != brute;
  }
  return {rbf_err < 1e-12 && onehot_err == 0.0 && angle_mismatch == 0,
          "RBF error " + fmt(rbf_err) + ", one-hot error " + fmt(onehot_err) + ", angle count mismatches " +
              std::to_string(angle_mismatch) + " of " + std::to_string(mols.size())};
}

Outcome parser_robustness() {
  const std::string golden = read_text_file(testing::data_path("golden.sdf"));
  const auto mols = parse_sdf(golden);
  const bool round_trip = write_sdf(mols) == golden && parse_sdf(write_sdf(mols)) == mols &&
                          parse_jsonl(write_jsonl(mols)) == mols;
  std::size_t files = 0, structured = 0;
  std::string failures;
  for (const auto& entry : fs::directory_iterator(testing::data_path("malformed"))) {
    ++files;
    const std::string name = entry.path().filename().string();
    try {
      (void)read_molecules(entry.path(), true);
      failures += " " + name + "(accepted)";
    } catch (const ParseError& e) {
      const ReadResult lenient = read_molecules(entry.path(), false);
      if (e.line() > 0 && !lenient.errors.empty()) ++structured;
      else failures += " " + name + "(lenient)";
    } catch (const std::exception& e) {
      failures += " " + name + "(" + e.what() + ")";
    }
  }
  return {round_trip && files > 0 && structured == files,
          "golden round-trip " + std::string(round_trip ? "ok" : "failed") + ", " + std::to_string(structured) + "/" +
              std::to_string(files) + " malformed files gave line-numbered errors" + failures};
}

Outcome determinism() {
  auto mols = generate_molecules(24, 109);
  attach_geometry_label(mols, "y");
  for (std::size_t i = 0; i < mols.size(); ++i) mols[i].split = static_cast<Split>(i % 3);
  auto run_once = [&](const std::string& tag) {
    const fs::path dir = work_dir() / ("determinism_" + tag);
    const ModelConfig model = testing::small_model(3, 16);
    PretrainOptions p;
    p.run.epochs = 3;
    p.run.batch_size = 8;
    p.run.seed = 12;
    p.out_dir = dir / "pre";
    const DatasetSplit split = split_by_tag(mols);
    const PretrainResult pre =
        pretrain(make_samples(split.train, {}), make_samples(split.valid, {}), initial_checkpoint(model, {}, 12), p);
    FinetuneOptions f;
    f.run.epochs = 5;
    f.run.batch_size = 8;
    f.run.seed = 13;
    f.out_dir = dir / "ft";
    finetune(split.train, split.valid, split.test, pre.checkpoint, model, {}, f);
    return slurp(dir / "pre" / "pretrain_log.jsonl") + slurp(dir / "ft" / "report.json");
  };
  const std::string a = run_once("a");
  const std::string b = run_once("b");
  return {!a.empty() && a == b, a == b ? std::to_string(a.size()) + " identical report bytes" : "reports differ"};
}

}  // namespace

// Usage: geognn_acceptance [--known-failure N]...
// A criterion listed as a known failure still prints FAIL; the exit status
// is zero only when the failing set equals the listed set.
int main(int argc, char** argv) {
  std::set<std::size_t> known;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--known-failure" && i + 1 < argc) {
      known.insert(std::stoul(argv[++i]));
    } else {
      std::cerr << "unknown argument: " << arg << "\n";
      return 2;
    }
  }
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient correctness", gradient_correctness},
      {"permutation invariance", permutation_invariance},
      {"rigid-motion invariance", rigid_motion_invariance},
      {"geometry discrimination", geometry_discrimination},
      {"self-supervised trainability", ssl_trainability},
      {"pretraining benefit", pretraining_benefit},
      {"overfit sanity", overfit_sanity},
      {"metric oracles", metric_oracles},
      {"featurization exactness", featurization_exactness},
      {"parser robustness", parser_robustness},
      {"determinism", determinism},
  };
  std::set<std::size_t> failed;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) failed.insert(i + 1);
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": " << o.detail
              << (!o.pass && known.count(i + 1) ? " (known failure)" : "") << std::endl;
  }
  std::cout << (criteria.size() - failed.size()) << "/" << criteria.size() << " criteria passed" << std::endl;
  for (std::size_t k : known)
    if (!failed.count(k)) std::cout << "criterion " << k << " is listed as a known failure but passed" << std::endl;
  return failed == known ? 0 : 1;
}
