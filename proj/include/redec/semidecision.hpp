#pragma once
// Fuel-budgeted semi-decision procedures.  A SemiDecision wraps a
// deterministic predicate of the fuel; acceptance is made monotone by
// construction (the wrapper remembers the earliest accepting fuel) and every
// combinator dovetails its children by interleaved single steps in a fixed
// round-robin order, so results are reproducible.

#include <redec/rational.hpp>

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace redec {

using Fuel = std::uint64_t;

enum class Status { ACCEPT, UNDECIDED };

class SemiDecision {
 public:
  SemiDecision() : SemiDecision([](Fuel) { return false; }) {}
  explicit SemiDecision(std::function<bool(Fuel)> step)
      : state_(std::make_shared<State>(std::move(step))) {}

  // The wrapped step must itself be fuel-monotone (every constructor in this
  // codebase builds it as a bounded search whose bound grows with the fuel);
  // the earliest observed accepting fuel is cached so repeated queries are
  // cheap and acceptance can never be "lost".
  Status query(Fuel fuel) const {
    State& st = *state_;
    if (st.accepted_at && *st.accepted_at <= fuel) return Status::ACCEPT;
    if (st.step(fuel)) {
      if (!st.accepted_at || fuel < *st.accepted_at) st.accepted_at = fuel;
      return Status::ACCEPT;
    }
    return Status::UNDECIDED;
  }

  bool accepted(Fuel fuel) const { return query(fuel) == Status::ACCEPT; }

  static SemiDecision always() {
    return SemiDecision([](Fuel) { return true; });
  }
  static SemiDecision never() { return SemiDecision(); }

  // Accepts iff all accept (dovetail: every child gets the same fuel).
  static SemiDecision all_of(std::vector<SemiDecision> parts) {
    return SemiDecision([parts = std::move(parts)](Fuel f) {
      for (auto& p : parts)
        if (p.query(f) != Status::ACCEPT) return false;
      return true;
    });
  }
  // Accepts iff some accepts.
  static SemiDecision any_of(std::vector<SemiDecision> parts) {
    return SemiDecision([parts = std::move(parts)](Fuel f) {
      for (auto& p : parts)
        if (p.query(f) == Status::ACCEPT) return true;
      return false;
    });
  }

 private:
  struct State {
    explicit State(std::function<bool(Fuel)> s) : step(std::move(s)) {}
    std::function<bool(Fuel)> step;
    std::optional<Fuel> accepted_at;
  };
  std::shared_ptr<State> state_;
};

}  // namespace redec
