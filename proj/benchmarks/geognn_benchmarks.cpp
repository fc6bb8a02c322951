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

#include <benchmark/benchmark.h>

#include "geognn/dual_graph.hpp"
#include "geognn/featurizer.hpp"
#include "geognn/model.hpp"
#include "geognn/mol_io.hpp"
#include "geognn/pretrain_tasks.hpp"
#include "geognn/synthetic.hpp"
#include "geognn/trainer.hpp"

namespace {

using namespace geognn;

std::vector<Molecule> corpus(std::size_t atoms) {
  SyntheticOptions o;
  o.min_atoms = o.max_atoms = atoms;
  return generate_molecules(16, 1, o);
}

void BM_ParseSdf(benchmark::State& state) {
  const std::string text = write_sdf(corpus(static_cast<std::size_t>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(parse_sdf(text));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_ParseSdf)->Arg(8)->Arg(32);

void BM_Featurize(benchmark::State& state) {
  const auto mols = corpus(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(make_samples(mols, {}));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * mols.size()));
}
BENCHMARK(BM_Featurize)->Arg(8)->Arg(32);

void BM_Forward(benchmark::State& state) {
  const auto samples = make_samples(corpus(static_cast<std::size_t>(state.range(0))), {});
  const GeoGnn model(ModelConfig{}, feature_layout({}));
  ParamStore store;
  model.init_params(store, 1);
  for (auto _ : state)
    for (const Sample& s : samples) {
      Tape tape;
      benchmark::DoNotOptimize(model.forward(tape, store, s.graph, s.encoded, Mode::kEval).graph.value());
    }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * samples.size()));
}
BENCHMARK(BM_Forward)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_PretrainStep(benchmark::State& state) {
  const auto samples = make_samples(corpus(static_cast<std::size_t>(state.range(0))), {});
  const GeoGnn model(ModelConfig{}, feature_layout({}));
  ParamStore store;
  model.init_params(store, 1);
  std::vector<const Sample*> batch;
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < samples.size(); ++i) batch.push_back(&samples[i]), seeds.push_back(i);
  for (auto _ : state) {
    GradBuffer grads(store.size());
    benchmark::DoNotOptimize(loss_pre(batch, seeds, store, model, TaskSelection{}, Mode::kTrain, &grads));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * samples.size()));
}
BENCHMARK(BM_PretrainStep)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
