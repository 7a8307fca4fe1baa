// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "multilog/cluster.hpp"
#include "multilog/drain.hpp"
#include "multilog/generator.hpp"
#include "multilog/standalone.hpp"

using namespace multilog;

namespace {

const ClusterDataset& corpus() {
    static const ClusterDataset ds = [] {
        GeneratorConfig cfg;
        cfg.n_nodes = 2;
        cfg.duration_s = 600;
        cfg.noise_rate = 0.05;
        return generate_dataset(cfg);
    }();
    return ds;
}

void BM_DrainParse(benchmark::State& state) {
    const auto& lines = corpus().entries[0];
    for (auto _ : state) {
        TemplateRegistry reg;
        for (const auto& e : lines) benchmark::DoNotOptimize(reg.parse_line(e.message));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(lines.size()));
}
BENCHMARK(BM_DrainParse)->Unit(benchmark::kMillisecond);

void BM_DrainFrozenMatch(benchmark::State& state) {
    const auto& lines = corpus().entries[0];
    TemplateRegistry reg;
    for (const auto& e : lines) reg.parse_line(e.message);
    reg.freeze();
    for (auto _ : state) {
        for (const auto& e : lines) benchmark::DoNotOptimize(reg.parse_line(e.message));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(lines.size()));
}
BENCHMARK(BM_DrainFrozenMatch)->Unit(benchmark::kMillisecond);

void BM_StandaloneForward(benchmark::State& state) {
    const EventSpace space{40};
    Rng rng(1);
    nn::Matrix table(50, static_cast<nn::Index>(space.table_size()));
    for (nn::Index i = 0; i < table.size(); ++i) table.data()[i] = rng.uniform(-1.0, 1.0);
    const StandaloneModel model(space, table, StandaloneConfig{}, 2);
    std::vector<Group> groups(static_cast<std::size_t>(state.range(0)));
    for (auto& g : groups) {
        for (int m = 0; m < 20; ++m) g.events.push_back(static_cast<EventId>(rng.below(40)));
    }
    std::vector<const Group*> ptrs;
    for (const auto& g : groups) ptrs.push_back(&g);
    for (auto _ : state) benchmark::DoNotOptimize(model.estimate(ptrs));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_StandaloneForward)->Arg(1)->Arg(32)->Unit(benchmark::kMicrosecond);

void BM_AutoencoderEncode(benchmark::State& state) {
    const ProbAutoencoder ae(AutoencoderConfig{}, 3);
    Rng rng(4);
    std::vector<double> list(static_cast<std::size_t>(state.range(0)));
    for (auto& p : list) p = rng.uniform();
    for (auto _ : state) benchmark::DoNotOptimize(ae.encode(list));
}
BENCHMARK(BM_AutoencoderEncode)->Arg(5)->Arg(128)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
