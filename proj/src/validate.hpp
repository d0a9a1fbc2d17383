// Shared argument checks for operations taking probability/label vectors.
#pragma once

#include <span>

#include "rareclass/error.hpp"

namespace rareclass::detail {

inline void check_prob_label_vectors(std::span<const double> probs,
                                     std::span<const int> labels) {
  if (probs.size() != labels.size()) {
    throw Error(ErrorKind::mismatch, "probability and label vectors differ in length");
  }
  for (const double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorKind::domain, "probability outside [0,1]");
    }
  }
  for (const int y : labels) {
    if (y != 0 && y != 1) {
      throw Error(ErrorKind::label, "labels must be 0 or 1");
    }
  }
}

}  // namespace rareclass::detail
