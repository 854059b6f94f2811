#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "stochad/random_stream.hpp"

namespace stochad {

enum class DerivativeMode { right, left };

// +1 for right derivatives, -1 for left. Stored weights are magnitudes; this
// sign turns them into the signed weights of a left derivative.
constexpr double mode_sign(DerivativeMode mode) { return mode == DerivativeMode::right ? 1.0 : -1.0; }

// How a Bernoulli draw with a SmoothedDual parameter is smoothed.
enum class SmoothingFlavor { right, left, straight_through };

using Tag = std::uint64_t;

/// A finite change `delta` that happens with infinitesimal probability
/// `weight * eps`. Perturbations with equal tags stem from the same upstream
/// jump and move together.
struct Perturbation {
  double delta = 0.0;
  double weight = 0.0;
  Tag tag = 0;

  friend bool operator==(const Perturbation&, const Perturbation&) = default;
};

/// State of one program evaluation: the primal random stream, the stream
/// used for pruning decisions, the tag counter and the live-tag registry.
///
/// Constructing an Evaluation makes it the thread's active evaluation until
/// it is destroyed; arithmetic on triples that needs to prune consults the
/// active one. Pruning draws never touch the primal stream, so the primal
/// computation sees exactly the draws an untraced run would.
class Evaluation {
 public:
  Evaluation(RandomStream primal, RandomStream pruning, DerivativeMode mode = DerivativeMode::right);
  // Streams derived from (seed, replicate).
  Evaluation(std::uint64_t seed, std::uint64_t replicate, DerivativeMode mode = DerivativeMode::right);
  ~Evaluation();

  Evaluation(const Evaluation&) = delete;
  Evaluation& operator=(const Evaluation&) = delete;

  static Evaluation* active();

  RandomStream& stream() { return primal_; }
  RandomStream& pruning_stream() { return pruning_; }
  DerivativeMode mode() const { return mode_; }

  SmoothingFlavor bernoulli_flavor() const { return flavor_; }
  void set_bernoulli_flavor(SmoothingFlavor flavor) { flavor_ = flavor; }

  // Issues a tag never used before in this evaluation and registers `weight` for it.
  Tag fresh_tag(double weight);
  std::uint64_t tags_issued() const { return registry_.size(); }

  // Current view of a perturbation: absent if its tag lost a pruning
  // decision, otherwise carrying the tag's current weight.
  std::optional<Perturbation> resolve(const std::optional<Perturbation>& pert) const;

  // Chooses which of two (resolved) perturbations an operation follows.
  // Distinct tags are pruned: the survivor takes the summed weight and the
  // loser's tag is retired for the rest of the evaluation. Returns the
  // chosen perturbation carrying the summed weight.
  std::optional<Perturbation> select(const std::optional<Perturbation>& a, const std::optional<Perturbation>& b);

  bool is_live(Tag tag) const;

 private:
  struct TagState {
    double weight;
    bool live;
  };
  const TagState* find(Tag tag) const;
  TagState* find(Tag tag);

  RandomStream primal_;
  RandomStream pruning_;
  DerivativeMode mode_;
  SmoothingFlavor flavor_ = SmoothingFlavor::straight_through;
  std::vector<TagState> registry_;
  Evaluation* previous_;
};

// Resolves against the active evaluation, or returns `pert` unchanged when none is active.
std::optional<Perturbation> resolve_active(const std::optional<Perturbation>& pert);

// Selection through the active evaluation. Without one, only compatible
// perturbations (one absent, or equal tags) can be combined.
std::optional<Perturbation> select_active(const std::optional<Perturbation>& a, const std::optional<Perturbation>& b);

/// Pure pairwise combination of two perturbations.
///
/// Equal tags add their changes (coupled jumps) and keep the common weight.
/// Distinct tags are pruned: the total weight is kept and the change of `a`
/// is chosen with probability w_a / (w_a + w_b); the chosen perturbation keeps
/// its own tag. A zero total weight yields no perturbation.
std::optional<Perturbation> combine_perturbations(const std::optional<Perturbation>& a,
                                                  const std::optional<Perturbation>& b, RandomStream& rng);

// combine_perturbations with the pruning uniform supplied: `a` is kept iff u * (w_a + w_b) < w_a.
std::optional<Perturbation> combine_perturbations_at(const std::optional<Perturbation>& a,
                                                     const std::optional<Perturbation>& b, double u);

}  // namespace stochad
