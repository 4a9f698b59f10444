#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "errors.hpp"
#include "random.hpp"

namespace evacnav {

struct RnnParams {
  double epsilon = 0.1;                 // exploration probability in select
  double threshold_smoothing_a = 0.8;   // T <- a T + (1 - a) R
  double fixed_point_tolerance = 1e-6;
  int max_iterations = 10'000;
  double excitation_cap = 0.9999;

  void validate() const {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("rnn.epsilon must lie in [0, 1]");
    if (!(threshold_smoothing_a > 0.0 && threshold_smoothing_a < 1.0))
      throw ConfigError("rnn.threshold_smoothing_a must lie in (0, 1)");
    if (!(fixed_point_tolerance > 0.0)) throw ConfigError("rnn.fixed_point_tolerance must be positive");
  }
};

// Random neural network with one neuron per candidate next hop. Excitation q(i) ranks the
// candidates; reinforce() moves q toward neurons that earned rewards above the running threshold.
class RandomNeuralNetwork {
 public:
  // Symmetric start: all off-diagonal weights 0.5, unit external excitation, no external inhibition.
  explicit RandomNeuralNetwork(std::size_t m, RnnParams params = {})
      : m_(m),
        params_(params),
        w_plus_(m * m, 0.0),
        w_minus_(m * m, 0.0),
        big_lambda_(m, 1.0),
        small_lambda_(m, 0.0),
        q_(m, 0.0) {
    if (m == 0) throw PreconditionError("random neural network needs at least one neuron");
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        if (i != j) {
          w_plus_[i * m + j] = 0.5;
          w_minus_[i * m + j] = 0.5;
        }
    solve();
  }

  // Arbitrary weights (diagonal is forced to zero); q is solved before returning.
  static RandomNeuralNetwork from_weights(std::size_t m, std::vector<double> w_plus,
                                          std::vector<double> w_minus, std::vector<double> big_lambda,
                                          std::vector<double> small_lambda, RnnParams params = {}) {
    RandomNeuralNetwork n(m, params);
    if (w_plus.size() != m * m || w_minus.size() != m * m || big_lambda.size() != m ||
        small_lambda.size() != m)
      throw PreconditionError("weight dimensions do not match neuron count");
    for (std::size_t i = 0; i < m * m; ++i)
      if (w_plus[i] < 0.0 || w_minus[i] < 0.0) throw PreconditionError("weights must be non-negative");
    n.w_plus_ = std::move(w_plus);
    n.w_minus_ = std::move(w_minus);
    for (std::size_t i = 0; i < m; ++i) n.w_plus_[i * m + i] = n.w_minus_[i * m + i] = 0.0;
    n.big_lambda_ = std::move(big_lambda);
    n.small_lambda_ = std::move(small_lambda);
    std::fill(n.q_.begin(), n.q_.end(), 0.0);
    n.solve();
    return n;
  }

  // Network over a new candidate set. Neuron k inherits old neuron origin[k] (or starts fresh when
  // origin[k] < 0); links between inherited neurons keep their weights, all others start at 0.5.
  // The reward threshold carries over.
  RandomNeuralNetwork remapped(std::span<const std::ptrdiff_t> origin) const {
    const std::size_t m = origin.size();
    RandomNeuralNetwork n(m, params_);
    for (std::size_t i = 0; i < m; ++i) {
      if (origin[i] < 0) continue;
      const auto oi = static_cast<std::size_t>(origin[i]);
      n.big_lambda_[i] = big_lambda_[oi];
      n.small_lambda_[i] = small_lambda_[oi];
      n.q_[i] = q_[oi];
      for (std::size_t j = 0; j < m; ++j) {
        if (i == j || origin[j] < 0) continue;
        const auto oj = static_cast<std::size_t>(origin[j]);
        n.w_plus_[i * m + j] = w_plus_[oi * m_ + oj];
        n.w_minus_[i * m + j] = w_minus_[oi * m_ + oj];
      }
    }
    n.threshold_ = threshold_;
    n.solve();
    return n;
  }

  std::size_t size() const { return m_; }
  const RnnParams& params() const { return params_; }
  std::span<const double> excitation() const { return q_; }
  double q(std::size_t i) const { return q_.at(i); }
  double threshold() const { return threshold_; }
  double w_plus(std::size_t i, std::size_t j) const { return w_plus_.at(i * m_ + j); }
  double w_minus(std::size_t i, std::size_t j) const { return w_minus_.at(i * m_ + j); }
  double external_excitation(std::size_t i) const { return big_lambda_.at(i); }
  double external_inhibition(std::size_t i) const { return small_lambda_.at(i); }

  // Total firing rate r(i) = sum_j w+(i,j) + w-(i,j).
  double firing_rate(std::size_t i) const {
    double r = 0.0;
    for (std::size_t j = 0; j < m_; ++j) r += w_plus_[i * m_ + j] + w_minus_[i * m_ + j];
    return r;
  }

  // Steady-state excitation q(i) = lambda+(i) / (r(i) + lambda-(i)) by fixed-point iteration from
  // the current q. Each q(i) is capped at excitation_cap. Returns the iteration count.
  int solve() {
    std::vector<double> rate(m_);
    for (std::size_t i = 0; i < m_; ++i) rate[i] = firing_rate(i);
    std::vector<double> next(m_);
    double residual = 0.0;
    for (int it = 1; it <= params_.max_iterations; ++it) {
      residual = 0.0;
      for (std::size_t i = 0; i < m_; ++i) {
        double excite = big_lambda_[i];
        double inhibit = small_lambda_[i];
        for (std::size_t j = 0; j < m_; ++j) {
          excite += q_[j] * w_plus_[j * m_ + i];
          inhibit += q_[j] * w_minus_[j * m_ + i];
        }
        const double denom = rate[i] + inhibit;
        double qi = denom > 0.0 ? excite / denom : params_.excitation_cap;
        qi = std::min(qi, params_.excitation_cap);
        residual = std::max(residual, std::abs(qi - q_[i]));
        next[i] = qi;
      }
      q_.swap(next);
      if (residual < params_.fixed_point_tolerance) return it;
    }
    throw ConvergenceError("random neural network excitation did not converge", residual);
  }

  // Reward-driven weight update for the neuron that was chosen. Rewards at or above the running
  // threshold strengthen excitatory links into the winner; rewards below it inhibit the winner.
  // Row firing rates are preserved, then T is smoothed and q re-solved.
  void reinforce(std::size_t winner, double reward) {
    if (winner >= m_) throw PreconditionError("winner neuron out of range");
    if (!(reward > 0.0)) throw PreconditionError("reward must be positive");
    if (m_ > 1) {
      std::vector<double> before(m_);
      for (std::size_t i = 0; i < m_; ++i) before[i] = firing_rate(i);
      const double share = reward / static_cast<double>(m_ - 1);
      auto& boosted = reward >= threshold_ ? w_plus_ : w_minus_;
      auto& spread = reward >= threshold_ ? w_minus_ : w_plus_;
      for (std::size_t i = 0; i < m_; ++i) {
        if (i != winner) boosted[i * m_ + winner] += reward;
        for (std::size_t k = 0; k < m_; ++k)
          if (k != i && k != winner) spread[i * m_ + k] += share;
      }
      for (std::size_t i = 0; i < m_; ++i) {
        const double after = firing_rate(i);
        if (before[i] <= 0.0 || after <= 0.0) continue;
        const double scale = before[i] / after;
        for (std::size_t k = 0; k < m_; ++k) {
          w_plus_[i * m_ + k] *= scale;
          w_minus_[i * m_ + k] *= scale;
        }
      }
    }
    threshold_ = params_.threshold_smoothing_a * threshold_ +
                 (1.0 - params_.threshold_smoothing_a) * reward;
    solve();
  }

  // Epsilon-greedy choice among neurons not in `forbidden` (same length as size()).
  // Greedy ties go to the smallest index.
  std::size_t select(double epsilon, const std::vector<bool>& forbidden, Rng& rng) const {
    if (forbidden.size() != m_) throw PreconditionError("forbidden mask has the wrong length");
    std::vector<std::size_t> allowed;
    for (std::size_t i = 0; i < m_; ++i)
      if (!forbidden[i]) allowed.push_back(i);
    if (allowed.empty()) throw PreconditionError("every neuron is forbidden");
    if (epsilon > 0.0 && rng.uniform() < epsilon) return allowed[rng.below(allowed.size())];
    std::size_t best = allowed.front();
    for (std::size_t i : allowed)
      if (q_[i] > q_[best]) best = i;
    return best;
  }

  std::size_t select(const std::vector<bool>& forbidden, Rng& rng) const {
    return select(params_.epsilon, forbidden, rng);
  }

 private:
  std::size_t m_;
  RnnParams params_;
  std::vector<double> w_plus_;   // row-major: w(i, j) = link from neuron i to neuron j
  std::vector<double> w_minus_;
  std::vector<double> big_lambda_;
  std::vector<double> small_lambda_;
  std::vector<double> q_;
  double threshold_ = 0.0;
};

}  // namespace evacnav
