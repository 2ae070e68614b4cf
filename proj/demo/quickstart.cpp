// Trains the three architectures on a small planted-partition graph and
// prints test accuracy for each.

#include <iostream>

#include "tagforge/tagforge.hpp"

int main() {
  using namespace tagforge;

  SyntheticSpec synth{.num_nodes = 300, .num_classes = 3, .p_in = 0.1, .p_out = 0.01, .dim = 16, .sep = 1.5};
  const Dataset ds = generate_synthetic(synth, 42);
  const SplitMask split = split_high(ds.num_nodes(), {}, 7);

  TrainSpec ts;
  for (Arch arch : {Arch::gcn, Arch::graph_transformer, Arch::mlp}) {
    const ModelSpec spec{.arch = arch, .in_dim = ds.features.cols(), .num_classes = ds.num_classes()};
    auto model = init_parameters(spec, 1);
    const RunResult r = train(model, ds, split, ts, 1);
    std::cout << display_name(arch) << ": test " << percent(r.test_acc_at_best_val) << "% after " << r.epochs_ran
              << " epochs\n";
  }
}
