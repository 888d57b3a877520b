#pragma once

#include <stdexcept>
#include <string>

namespace stam {

// Error categories map to CLI exit codes (see cli.hpp):
//   config_error -> 2, data_error -> 3, eval_error -> 4.
// state_error marks contract violations inside the learner (empty pool,
// update of a frozen LTM centroid, ...) and is a bug in the caller, not input.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct eval_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct state_error : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace stam
