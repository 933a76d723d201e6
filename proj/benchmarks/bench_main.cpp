#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "neucrowd/nn.hpp"
#include "neucrowd/sampler.hpp"
#include "neucrowd/srl.hpp"
#include "neucrowd/tuplet.hpp"

namespace {

using neucrowd::DenseNet;

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

// Syn-sized embedding network: 1200 -> 128 -> 64.
DenseNet syn_net() {
  const std::vector<int> dims{1200, 128, 64};
  return neucrowd::init_network(dims, 0.2, 1);
}

void BM_Forward(benchmark::State& state) {
  const DenseNet net = syn_net();
  const Eigen::MatrixXd x = random_matrix(1200, state.range(0), 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(neucrowd::forward(net, x, true, 3).output.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Forward)->Arg(64)->Arg(320)->Arg(960);

void BM_ForwardBackward(benchmark::State& state) {
  const DenseNet net = syn_net();
  const Eigen::MatrixXd x = random_matrix(1200, state.range(0), 2);
  const Eigen::MatrixXd g = random_matrix(64, state.range(0), 4);
  for (auto _ : state) {
    const auto cache = neucrowd::forward(net, x, true, 3);
    benchmark::DoNotOptimize(neucrowd::backward(net, cache, g).params.weights[0].data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBackward)->Arg(64)->Arg(320);

void BM_ComputeSafety(benchmark::State& state) {
  const auto n = state.range(0);
  const Eigen::MatrixXd emb = random_matrix(64, n, 5);
  std::vector<int> labels(static_cast<std::size_t>(n));
  std::vector<double> a(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    labels[i] = static_cast<int>(i % 2);
    a[i] = static_cast<double>(i % 7) / 7.0;
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(neucrowd::compute_safety(emb, labels, a, 8, 0.0, 0).entries.data());
  }
}
BENCHMARK(BM_ComputeSafety)->Arg(200)->Arg(800);

void BM_BatchLoss(benchmark::State& state) {
  const int n = 5;
  const auto tuplets = state.range(0);
  const Eigen::MatrixXd members = random_matrix(64, tuplets * n, 6);
  const std::vector<double> a(static_cast<std::size_t>(tuplets * n), 0.6);
  std::vector<int> groups(static_cast<std::size_t>(tuplets));
  for (std::size_t t = 0; t < groups.size(); ++t) groups[t] = static_cast<int>(t % 2);
  neucrowd::BatchLossOptions opts;
  opts.anchor_groups = groups;
  for (auto _ : state) {
    benchmark::DoNotOptimize(neucrowd::batch_loss(members, n, a, {}, opts).mean_loss);
  }
}
BENCHMARK(BM_BatchLoss)->Arg(64);

void BM_ConstructTuplets(benchmark::State& state) {
  std::vector<int> labels(800);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 2);
  const std::vector<double> w(labels.size(), 1.0);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(neucrowd::construct_tuplets(labels, w, 5, 192, ++seed).data());
  }
}
BENCHMARK(BM_ConstructTuplets);

void BM_ScoreTuplets(benchmark::State& state) {
  const std::vector<int> trunk{128, 64};
  const auto sampler = neucrowd::init_sampler(1200, trunk, 5, 0.2, 7);
  const Eigen::MatrixXd features = random_matrix(1200, 800, 8);
  std::vector<int> labels(800);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 2);
  const std::vector<double> w(labels.size(), 1.0);
  const auto tuplets = neucrowd::construct_tuplets(labels, w, 5, 192, 9);
  for (auto _ : state) {
    benchmark::DoNotOptimize(neucrowd::score_tuplets(sampler, tuplets, features).data());
  }
}
BENCHMARK(BM_ScoreTuplets);

}  // namespace

// The distro's static benchmark_main archive carries LTO bytecode from another
// compiler release, so the entry point lives here.
BENCHMARK_MAIN();
