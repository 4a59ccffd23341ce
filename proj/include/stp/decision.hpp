#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "stp/common.hpp"
#include "stp/rng.hpp"

namespace stp {

/// Independent draw with probability q at every period boundary.
struct BernoulliDecision {
  double q = 0;
  std::uint64_t seed = 0;
};

/// Two-or-more-state hidden Markov chain over periods with a Bernoulli
/// "activity-like" emission per state.
struct ActivityHmm {
  Eigen::MatrixXd transition;  ///< row-stochastic, state_count x state_count
  Eigen::VectorXd emission;    ///< P(activity-like | state)
  Eigen::VectorXd initial;     ///< initial state distribution
  std::uint64_t seed = 0;

  int state_count() const { return static_cast<int>(emission.size()); }

  /// Throws InvalidArgument unless the stochastic invariants hold (1e-9).
  void validate() const;

  /// Stationary state distribution of the transition matrix.
  Eigen::VectorXd stationary() const;

  /// Long-run fraction of periods that emit true.
  double stationary_activity_frequency() const { return stationary().dot(emission); }
};

using DecisionSpec = std::variant<BernoulliDecision, ActivityHmm>;

/// Stateful decision function; one instance per shaping run.
class DecisionFunction {
 public:
  explicit DecisionFunction(DecisionSpec spec);

  /// Called once per period boundary, in increasing period order.
  bool decide(std::int64_t period_index);

  /// Hidden state after the last decide() call (HMM only, -1 otherwise).
  int hidden_state() const { return state_; }

 private:
  int draw_from(const Eigen::Ref<const Eigen::VectorXd>& dist);

  DecisionSpec spec_;
  Rng rng_;
  int state_ = -1;
};

struct HmmFitResult {
  ActivityHmm model;
  std::vector<double> log_likelihood;  ///< one entry per EM parameter set visited
  int iterations = 0;
  bool degenerate = false;
  std::vector<std::string> warnings;
};

struct HmmFitOptions {
  int state_count = 2;
  int max_iterations = 100;
  double tolerance = 1e-6;
  int restarts = 3;         ///< seeded random starting points besides the two fixed ones
  std::uint64_t seed = 0;  ///< restart stream; also copied into the fitted model
};

/// Baum-Welch over a binary observation sequence, keeping the best of several
/// starting points.
HmmFitResult hmm_fit(const std::vector<bool>& flags, const HmmFitOptions& options = {});

/// Log-likelihood of `flags` under `model` (scaled forward pass).
double hmm_log_likelihood(const ActivityHmm& model, const std::vector<bool>& flags);

struct HmmSample {
  std::vector<bool> flags;
  std::vector<int> states;
};

/// Same stream as repeated DecisionFunction::decide on the model.
HmmSample hmm_sample(const ActivityHmm& model, std::int64_t periods);

void to_json(nlohmann::json& j, const ActivityHmm& m);
void from_json(const nlohmann::json& j, ActivityHmm& m);

}  // namespace stp
