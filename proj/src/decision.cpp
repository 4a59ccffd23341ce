#include "stp/decision.hpp"

#include <cmath>

#include "stp/common.hpp"

namespace stp {
namespace {

constexpr double kStochasticTolerance = 1e-9;

std::uint64_t spec_seed(const DecisionSpec& spec) {
  return std::visit([](const auto& s) { return s.seed; }, spec);
}

struct ForwardBackward {
  Eigen::MatrixXd alpha;  // K x N, each column normalized
  Eigen::MatrixXd beta;   // K x N, scaled
  Eigen::VectorXd scale;  // c_t
  double log_likelihood = 0;
};

ForwardBackward forward_backward(const ActivityHmm& m, const std::vector<bool>& flags, bool with_beta) {
  const auto k = m.state_count();
  const auto n = static_cast<Eigen::Index>(flags.size());
  const Eigen::VectorXd on = m.emission;
  const Eigen::VectorXd off = Eigen::VectorXd::Ones(k) - m.emission;
  auto b = [&](Eigen::Index t) -> const Eigen::VectorXd& { return flags[static_cast<std::size_t>(t)] ? on : off; };

  ForwardBackward fb;
  fb.alpha.resize(k, n);
  fb.scale.resize(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    Eigen::VectorXd a = t == 0 ? m.initial : (m.transition.transpose() * fb.alpha.col(t - 1)).eval();
    a = a.cwiseProduct(b(t));
    const double c = a.sum();
    if (!(c > 0)) throw InvalidArgument("observation sequence has zero probability under the model");
    fb.scale(t) = c;
    fb.alpha.col(t) = a / c;
    fb.log_likelihood += std::log(c);
  }
  if (with_beta) {
    fb.beta.resize(k, n);
    fb.beta.col(n - 1).setOnes();
    for (Eigen::Index t = n - 2; t >= 0; --t)
      fb.beta.col(t) = m.transition * b(t + 1).cwiseProduct(fb.beta.col(t + 1)) / fb.scale(t + 1);
  }
  return fb;
}

void normalize_rows(Eigen::MatrixXd& a) {
  for (Eigen::Index i = 0; i < a.rows(); ++i) a.row(i) /= a.row(i).sum();
}

}  // namespace

void ActivityHmm::validate() const {
  const auto k = emission.size();
  if (k < 2) throw InvalidArgument("HMM needs at least 2 states");
  if (transition.rows() != k || transition.cols() != k || initial.size() != k)
    throw InvalidArgument("HMM parameter shapes disagree");
  for (Eigen::Index i = 0; i < k; ++i) {
    if (std::abs(transition.row(i).sum() - 1) > kStochasticTolerance)
      throw InvalidArgument("HMM transition row " + std::to_string(i) + " does not sum to 1");
    if (emission(i) < 0 || emission(i) > 1) throw InvalidArgument("HMM emission outside [0, 1]");
  }
  if ((transition.array() < 0).any() || (initial.array() < 0).any())
    throw InvalidArgument("HMM probabilities must be non-negative");
  if (std::abs(initial.sum() - 1) > kStochasticTolerance) throw InvalidArgument("HMM initial does not sum to 1");
}

Eigen::VectorXd ActivityHmm::stationary() const {
  // pi^T (A - I) = 0 with one equation replaced by sum(pi) = 1
  const auto k = transition.rows();
  Eigen::MatrixXd system = transition.transpose() - Eigen::MatrixXd::Identity(k, k);
  system.row(k - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
  rhs(k - 1) = 1;
  Eigen::VectorXd pi = system.fullPivLu().solve(rhs);
  pi = pi.cwiseMax(0.0);
  return pi / pi.sum();
}

DecisionFunction::DecisionFunction(DecisionSpec spec) : spec_(std::move(spec)), rng_(spec_seed(spec_)) {
  if (const auto* b = std::get_if<BernoulliDecision>(&spec_)) {
    if (!(b->q >= 0 && b->q <= 1)) throw InvalidArgument("q must be in [0, 1]");
  } else {
    std::get<ActivityHmm>(spec_).validate();
  }
}

int DecisionFunction::draw_from(const Eigen::Ref<const Eigen::VectorXd>& dist) {
  const double u = rng_.uniform();
  double acc = 0;
  for (Eigen::Index i = 0; i < dist.size(); ++i) {
    acc += dist(i);
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(dist.size() - 1);
}

bool DecisionFunction::decide(std::int64_t /*period_index*/) {
  if (const auto* b = std::get_if<BernoulliDecision>(&spec_)) return rng_.bernoulli(b->q);
  const auto& m = std::get<ActivityHmm>(spec_);
  state_ = state_ < 0 ? draw_from(m.initial) : draw_from(m.transition.row(state_).transpose());
  return rng_.bernoulli(m.emission(state_));
}

double hmm_log_likelihood(const ActivityHmm& model, const std::vector<bool>& flags) {
  if (flags.empty()) return 0;
  return forward_backward(model, flags, false).log_likelihood;
}

HmmFitResult hmm_fit(const std::vector<bool>& flags, const HmmFitOptions& options) {
  const int k = options.state_count;
  if (k < 2) throw InvalidArgument("state_count must be >= 2");
  if (flags.size() < static_cast<std::size_t>(10 * k))
    throw InvalidArgument("need at least 10 x state_count observations");

  HmmFitResult out;
  out.model.seed = options.seed;
  const auto n = static_cast<Eigen::Index>(flags.size());
  std::int64_t ones = 0;
  for (bool f : flags) ones += f;

  if (ones == 0 || ones == n) {
    const double eps = 1e-3;
    out.degenerate = true;
    out.warnings.push_back(ones == 0 ? "all observations false; degenerate single-regime model"
                                     : "all observations true; degenerate single-regime model");
    out.model.emission = Eigen::VectorXd::Constant(k, ones == 0 ? 0.0 : 1.0);
    out.model.transition = Eigen::MatrixXd::Constant(k, k, eps / (k - 1));
    out.model.transition.diagonal().setConstant(1 - eps);
    out.model.initial = Eigen::VectorXd::Constant(k, 1.0 / k);
    out.log_likelihood.push_back(hmm_log_likelihood(out.model, flags));
    return out;
  }

  Eigen::VectorXd obs(n);
  for (Eigen::Index t = 0; t < n; ++t) obs(t) = flags[static_cast<std::size_t>(t)] ? 1.0 : 0.0;

  // Starting points: emissions spread around the observed frequency with
  // flat and with sticky transitions, then seeded random ones. EM only finds
  // a local optimum; the best final likelihood wins.
  const double freq = static_cast<double>(ones) / static_cast<double>(n);
  const double spread = std::min(freq, 1 - freq);
  std::vector<ActivityHmm> starts;
  for (double diag : {1.0 / k, 0.9}) {
    ActivityHmm m;
    m.emission.resize(k);
    for (int i = 0; i < k; ++i) m.emission(i) = freq + 0.5 * spread * (2.0 * i / (k - 1) - 1);
    m.transition = Eigen::MatrixXd::Constant(k, k, (1 - diag) / (k - 1));
    m.transition.diagonal().setConstant(diag);
    m.initial = Eigen::VectorXd::Constant(k, 1.0 / k);
    starts.push_back(std::move(m));
  }
  Rng rng(options.seed);
  for (int r = 0; r < options.restarts; ++r) {
    ActivityHmm m;
    m.emission.resize(k);
    m.transition.resize(k, k);
    for (int i = 0; i < k; ++i) {
      m.emission(i) = 0.05 + 0.9 * rng.uniform();
      for (int c = 0; c < k; ++c) m.transition(i, c) = 0.1 + rng.uniform();
    }
    normalize_rows(m.transition);
    m.initial = Eigen::VectorXd::Constant(k, 1.0 / k);
    starts.push_back(std::move(m));
  }

  bool have = false;
  for (auto& m : starts) {
    std::vector<double> lls;
    int iterations = 0;
    for (int it = 0; it < options.max_iterations; ++it) {
      const auto fb = forward_backward(m, flags, true);
      lls.push_back(fb.log_likelihood);
      if (it > 0 && fb.log_likelihood - lls[lls.size() - 2] < options.tolerance) break;

      const Eigen::MatrixXd gamma = fb.alpha.cwiseProduct(fb.beta);  // columns sum to 1
      Eigen::MatrixXd xi_sum = Eigen::MatrixXd::Zero(k, k);
      const Eigen::VectorXd on = m.emission;
      const Eigen::VectorXd off = Eigen::VectorXd::Ones(k) - m.emission;
      for (Eigen::Index t = 0; t + 1 < n; ++t) {
        const Eigen::VectorXd next = (flags[static_cast<std::size_t>(t + 1)] ? on : off).cwiseProduct(fb.beta.col(t + 1));
        xi_sum += (fb.alpha.col(t) * next.transpose()).cwiseProduct(m.transition) / fb.scale(t + 1);
      }

      const Eigen::VectorXd occupancy = gamma.rowwise().sum();
      const Eigen::VectorXd leaving = occupancy - gamma.col(n - 1);
      for (int i = 0; i < k; ++i) {
        if (leaving(i) > 0) m.transition.row(i) = xi_sum.row(i) / leaving(i);
        if (occupancy(i) > 0) m.emission(i) = std::clamp(gamma.row(i).dot(obs) / occupancy(i), 0.0, 1.0);
      }
      normalize_rows(m.transition);
      m.initial = gamma.col(0) / gamma.col(0).sum();
      ++iterations;
    }
    if (iterations == options.max_iterations) lls.push_back(hmm_log_likelihood(m, flags));
    if (!have || lls.back() > out.log_likelihood.back()) {
      have = true;
      out.model.transition = m.transition;
      out.model.emission = m.emission;
      out.model.initial = m.initial;
      out.log_likelihood = std::move(lls);
      out.iterations = iterations;
    }
  }
  out.model.validate();
  return out;
}

HmmSample hmm_sample(const ActivityHmm& model, std::int64_t periods) {
  DecisionFunction fn(model);
  HmmSample out;
  out.flags.reserve(static_cast<std::size_t>(std::max<std::int64_t>(periods, 0)));
  out.states.reserve(out.flags.capacity());
  for (std::int64_t i = 0; i < periods; ++i) {
    out.flags.push_back(fn.decide(i));
    out.states.push_back(fn.hidden_state());
  }
  return out;
}

void to_json(nlohmann::json& j, const ActivityHmm& m) {
  const auto k = m.state_count();
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < k; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < k; ++c) row.push_back(m.transition(i, c));
    rows.push_back(std::move(row));
  }
  j = nlohmann::json{{"state_count", k},
                     {"transition", std::move(rows)},
                     {"emission", std::vector<double>(m.emission.data(), m.emission.data() + k)},
                     {"initial", std::vector<double>(m.initial.data(), m.initial.data() + k)},
                     {"seed", m.seed}};
}

void from_json(const nlohmann::json& j, ActivityHmm& m) {
  const int k = j.at("state_count").get<int>();
  if (k < 2) throw InvalidArgument("HMM needs at least 2 states");
  const auto rows = j.at("transition").get<std::vector<std::vector<double>>>();
  const auto emission = j.at("emission").get<std::vector<double>>();
  const auto initial = j.at("initial").get<std::vector<double>>();
  if (rows.size() != static_cast<std::size_t>(k) || emission.size() != rows.size() || initial.size() != rows.size())
    throw InvalidArgument("HMM JSON shapes disagree with state_count");
  m.transition.resize(k, k);
  for (int i = 0; i < k; ++i) {
    if (rows[static_cast<std::size_t>(i)].size() != static_cast<std::size_t>(k))
      throw InvalidArgument("HMM transition row has wrong length");
    for (int c = 0; c < k; ++c) m.transition(i, c) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
  }
  m.emission = Eigen::Map<const Eigen::VectorXd>(emission.data(), k);
  m.initial = Eigen::Map<const Eigen::VectorXd>(initial.data(), k);
  m.seed = j.value("seed", std::uint64_t{0});
  m.validate();
}

}  // namespace stp
