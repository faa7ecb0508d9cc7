#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "recnet/autodiff.hpp"
#include "recnet/decoder.hpp"
#include "recnet/features.hpp"
#include "recnet/optim.hpp"
#include "recnet/random.hpp"
#include "recnet/tensor.hpp"

namespace recnet {

enum class ReconstructorKind { global, local };

std::string_view kind_name(ReconstructorKind kind);

// Numerical floor inside the Euclidean distance so its gradient exists at 0.
inline constexpr double kDistanceEps = 1e-12;

// Reconstructor parameters. The LSTM hidden size equals the feature dimension
// d so reconstructed states compare directly with frame features.
//
// global: the LSTM input at step t is [h_t; φ(H)], weights (4d, 2H + d).
// local:  the LSTM input at step t is μ_t,          weights (4d, H + d), plus
//         additive attention over decoder states queried by z_{t−1}
//         (projection width d).
struct ReconstructorParams {
  ReconstructorKind kind = ReconstructorKind::global;
  Tensor lstm_weights;
  Tensor lstm_bias;    // (4d)
  Tensor att_state;    // local only: (d, d)  projects z_{t−1}
  Tensor att_hidden;   // local only: (d, H)  projects each decoder state h_i
  Tensor att_score;    // local only: (d)
  Tensor att_bias;     // local only: (d)

  static ReconstructorParams zeros(ReconstructorKind kind, const ModelDims& dims);
  static ReconstructorParams uniform(ReconstructorKind kind, const ModelDims& dims, Rng& rng,
                                     double scale);

  std::vector<ParamRef> refs();
  void validate(const ModelDims& dims) const;
};

struct ReconstructorNodes {
  ReconstructorKind kind = ReconstructorKind::global;
  Var lstm_weights, lstm_bias;
  Var att_state, att_hidden, att_score, att_bias;

  static ReconstructorNodes bind(Tape& tape, const ReconstructorParams& params, bool trainable);
  std::vector<Var> all() const;
};

struct ReconstructionTrace {
  Tensor states;     // Z, (T, d)
  Tensor summary;    // global: φ(H)
  Tensor attention;  // local: β, (m, n)
  Tensor contexts;   // local: μ, (m, H)

  std::size_t steps() const { return states.rows(); }
};

struct ReconstructionGraph {
  std::vector<Var> states;
  Var summary;
  std::vector<Var> attention;
  std::vector<Var> contexts;

  ReconstructionTrace trace() const;
};

// Arithmetic mean of the vectors selected by mask (all when mask is empty).
Tensor mean_pool(std::span<const Tensor> vectors, const Mask& mask = {});

// ψ(a, b) = sqrt(Σ(a − b)² + kDistanceEps).
double euclidean_distance(const Tensor& a, const Tensor& b);

// One step per decoder state: z_t from (h_t, φ(H), z_{t−1}).
ReconstructionGraph reconstruct_global(std::span<const Var> hidden, const ReconstructorNodes& params);
// One step per frame slot: μ_t = Σ_i β_i^t h_i, z_t from (μ_t, z_{t−1}).
ReconstructionGraph reconstruct_local(std::span<const Var> hidden, std::size_t frame_budget,
                                      const ReconstructorNodes& params);

// ψ(φ(V), φ(Z)) with φ(V) the masked mean of the frame features.
Var global_loss(const FrameFeatureSequence& frames, const ReconstructionGraph& rec);
// Mean of ψ(z_j, v_j) over the unmasked frame slots.
Var local_loss(const FrameFeatureSequence& frames, const ReconstructionGraph& rec);

// Value-level wrappers.
ReconstructionTrace reconstruct_global(const DecoderTrace& trace, const ReconstructorParams& params);
ReconstructionTrace reconstruct_local(const DecoderTrace& trace, std::size_t frame_budget,
                                      const ReconstructorParams& params);
double global_loss(const FrameFeatureSequence& frames, const ReconstructionTrace& rec);
double local_loss(const FrameFeatureSequence& frames, const ReconstructionTrace& rec);

}  // namespace recnet
