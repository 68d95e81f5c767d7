// Copyright 2026 The dtkg Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "dtkg/pipeline.hpp"
#include "dtkg/synthetic.hpp"

namespace {

// End to end under the mock backend; only the merge stages do real work.
void BM_MockStream(benchmark::State& state) {
    dtkg::PipelineConfig c;
    c.backend.kind = dtkg::BackendKind::kMock;
    dtkg::Pipeline p(c);
    const auto batches =
        dtkg::group_by_observation(dtkg::synthetic::grammar_corpus(static_cast<std::size_t>(state.range(0)), 7));
    for (auto _ : state) benchmark::DoNotOptimize(p.run_stream(batches));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MockStream)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
