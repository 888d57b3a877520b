// Minimal end-to-end walkthrough on synthetic digits: build a stream, learn
// online without labels, then classify with a handful of labeled examples.

#include <cstdio>
#include <span>

#include "stam/associations.hpp"
#include "stam/classify.hpp"
#include "stam/hierarchy.hpp"
#include "stam/stream.hpp"
#include "stam/synth.hpp"

int main() {
  using namespace stam;

  // A small dataset: 300 train / 60 test images per class, classes 0-3.
  const auto train = make_synthetic_digits(300, /*seed=*/7);
  const auto test = make_synthetic_digits(60, derive_seed(7, "test-split"));

  StreamSpec spec;
  spec.phases = {{0, 1}, {2, 3}};  // two classes arrive per phase
  spec.examples_per_phase = 600;
  spec.seed = 42;
  const auto stream = build_stream(train, spec);

  LayerConfig l1{.rho = 8, .stm_capacity = 120, .theta = 20.0};
  LayerConfig l2{.rho = 13, .stm_capacity = 120, .theta = 20.0};
  Hierarchy h({l1, l2});
  h.init_from_images(
      std::span(stream.data(), h.init_prefix_length(stream)), /*seed=*/1);

  for (std::size_t p = 0; p < spec.phases.size(); ++p) {
    for (int i = 0; i < spec.examples_per_phase; ++i)
      h.process_image(stream[p * spec.examples_per_phase + i]);

    const auto classes = spec.classes_seen(p);
    const auto labeled = sample_labeled_set(train, classes, 10, /*seed=*/5);
    const auto tests = sample_test_set(test, classes, 30, /*seed=*/5);
    const auto assoc = compute_associations(h, labeled, /*gamma=*/0.15);

    int correct = 0;
    for (const Image& im : tests.examples)
      if (classify(h, assoc, im).class_id == im.label) ++correct;
    std::printf("phase %zu: %d classes, LTM %zu+%zu, accuracy %.2f\n", p + 1,
                static_cast<int>(classes.size()), h.layer(0).ltm().size(),
                h.layer(1).ltm().size(),
                double(correct) / double(tests.examples.size()));
  }
  return 0;
}
