#include "stochad/evaluation.hpp"

#include <cmath>
#include <string>

#include "stochad/errors.hpp"

namespace stochad {

namespace {

thread_local Evaluation* g_active = nullptr;

constexpr std::uint64_t kPrimalPurpose = 1;
constexpr std::uint64_t kPruningPurpose = 2;

void check_weight(const Perturbation& p) {
  if (!(p.weight >= 0.0) || !std::isfinite(p.weight)) {
    throw ContractViolation("perturbation weight must be finite and nonnegative, got " + std::to_string(p.weight));
  }
}

}  // namespace

Evaluation::Evaluation(RandomStream primal, RandomStream pruning, DerivativeMode mode)
    : primal_(primal), pruning_(pruning), mode_(mode), previous_(g_active) {
  g_active = this;
}

Evaluation::Evaluation(std::uint64_t seed, std::uint64_t replicate, DerivativeMode mode)
    : Evaluation(RandomStream(seed, RandomStream::derive_id(kPrimalPurpose, replicate)),
                 RandomStream(seed, RandomStream::derive_id(kPruningPurpose, replicate)), mode) {}

Evaluation::~Evaluation() { g_active = previous_; }

Evaluation* Evaluation::active() { return g_active; }

Tag Evaluation::fresh_tag(double weight) {
  if (!(weight >= 0.0) || !std::isfinite(weight)) {
    throw ContractViolation("perturbation weight must be finite and nonnegative");
  }
  registry_.push_back({weight, true});
  return registry_.size();
}

const Evaluation::TagState* Evaluation::find(Tag tag) const {
  if (tag == 0 || tag > registry_.size()) return nullptr;
  return &registry_[tag - 1];
}

Evaluation::TagState* Evaluation::find(Tag tag) {
  if (tag == 0 || tag > registry_.size()) return nullptr;
  return &registry_[tag - 1];
}

bool Evaluation::is_live(Tag tag) const {
  const TagState* state = find(tag);
  return state == nullptr || state->live;
}

std::optional<Perturbation> Evaluation::resolve(const std::optional<Perturbation>& pert) const {
  if (!pert) return std::nullopt;
  const TagState* state = find(pert->tag);
  if (state == nullptr) return pert;  // not issued here; taken at face value
  if (!state->live) return std::nullopt;
  return Perturbation{pert->delta, state->weight, pert->tag};
}

std::optional<Perturbation> Evaluation::select(const std::optional<Perturbation>& a,
                                               const std::optional<Perturbation>& b) {
  if (!a) return b;
  if (!b) return a;
  check_weight(*a);
  check_weight(*b);
  if (a->tag == b->tag) return a;

  const double total = a->weight + b->weight;
  TagState* sa = find(a->tag);
  TagState* sb = find(b->tag);
  if (total == 0.0) {
    if (sa) sa->live = false;
    if (sb) sb->live = false;
    return std::nullopt;
  }
  const bool keep_a = pruning_.uniform() * total < a->weight;
  TagState* winner = keep_a ? sa : sb;
  TagState* loser = keep_a ? sb : sa;
  if (winner) winner->weight = total;
  if (loser) loser->live = false;
  Perturbation chosen = keep_a ? *a : *b;
  chosen.weight = total;
  return chosen;
}

std::optional<Perturbation> resolve_active(const std::optional<Perturbation>& pert) {
  if (Evaluation* ev = Evaluation::active()) return ev->resolve(pert);
  return pert;
}

std::optional<Perturbation> select_active(const std::optional<Perturbation>& a, const std::optional<Perturbation>& b) {
  if (Evaluation* ev = Evaluation::active()) return ev->select(a, b);
  if (!a) return b;
  if (!b) return a;
  check_weight(*a);
  check_weight(*b);
  if (a->tag == b->tag) return a;
  throw ContractViolation("pruning between distinct tags requires an active Evaluation");
}

std::optional<Perturbation> combine_perturbations_at(const std::optional<Perturbation>& a,
                                                     const std::optional<Perturbation>& b, double u) {
  if (a) check_weight(*a);
  if (b) check_weight(*b);
  if (!a) return b;
  if (!b) return a;
  if (a->tag == b->tag) return Perturbation{a->delta + b->delta, a->weight, a->tag};
  const double total = a->weight + b->weight;
  if (total == 0.0) return std::nullopt;
  const Perturbation& chosen = u * total < a->weight ? *a : *b;
  return Perturbation{chosen.delta, total, chosen.tag};
}

std::optional<Perturbation> combine_perturbations(const std::optional<Perturbation>& a,
                                                  const std::optional<Perturbation>& b, RandomStream& rng) {
  const bool distinct = a && b && a->tag != b->tag && a->weight + b->weight > 0.0;
  return combine_perturbations_at(a, b, distinct ? rng.uniform() : 0.0);
}

}  // namespace stochad
