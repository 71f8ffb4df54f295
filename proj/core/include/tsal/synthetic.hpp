#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tsal/dataset.hpp"
#include "tsal/types.hpp"

namespace tsal {

struct CombinationPrior {
  LabelCombination combo;
  double probability = 0.0;
  std::vector<double> center;  // empty: sum of the per-label signatures
  double spread = 1.0;         // multiplies the global noise scale
  // For derived centers of combinations without the exclusive label: the
  // center is severity * (sum of signatures) + (1 - severity) * (exclusive
  // signature), so low severity places a mode close to the healthy cluster.
  double severity = 1.0;
};

/// Class-conditional Gaussian benchmark. Pool and test samples are drawn
/// from the same combination prior. A combination may appear more than
/// once in the prior to give it several modes.
struct SynthConfig {
  std::string name = "synthetic";
  LabelSchema schema;
  std::size_t n_samples = 0;  // candidate pool
  std::size_t n_test = 0;
  std::size_t feature_dim = 0;
  std::vector<CombinationPrior> prior;
  double noise_scale = 1.0;
  double signature_scale = 3.0;  // norm of each derived per-label signature
  std::uint64_t seed = 0;

  /// Prior must sum to 1 and must never pair the exclusive label with another.
  void validate() const;
};

/// Desk-scale stand-in for the four-symptom lung ultrasound task: 2000 pool
/// + 500 test, 32 features, labels (A-line, B-line, P-lesion, P-effusion)
/// with A-line exclusive and P-effusion rare. Finding combinations come in a
/// full and a mild mode, the latter closer to the A-line center.
SynthConfig lusms_synth_v1(std::uint64_t seed = 42);

Dataset generate_synthetic(const SynthConfig& cfg);

std::string synth_config_to_json(const SynthConfig& cfg);
SynthConfig synth_config_from_json(const std::string& text);

}  // namespace tsal
